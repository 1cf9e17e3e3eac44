#pragma once

// Minimal deterministic SVG charts: one grouped bar chart and one line chart.
// Numbers are printed with a fixed precision so output diffs cleanly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asms/error.hpp"

namespace asms::svg {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

struct Frame {
  double width = 640, height = 400;
  double left = 70, right = 20, top = 40, bottom = 60;
  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
};

struct Axis {
  double lo = 0, hi = 1;

  static Axis fit(double lo, double hi) {
    if (!(hi > lo)) {
      lo -= 1;
      hi += 1;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
  }
  double map(double v, double px_lo, double px_hi) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

namespace detail {

inline void header(std::ostringstream& o, const Frame& f, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(f.width) << "\" height=\""
    << fmt(f.height) << "\" viewBox=\"0 0 " << fmt(f.width) << ' ' << fmt(f.height) << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fmt(f.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">"
    << escape(title) << "</text>\n";
}

inline void y_axis(std::ostringstream& o, const Frame& f, const Axis& y, const std::string& label) {
  const double x0 = f.left, y0 = f.top + f.plot_h();
  o << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(f.top) << "\" x2=\"" << fmt(x0) << "\" y2=\""
    << fmt(y0) << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0 + f.plot_w())
    << "\" y2=\"" << fmt(y0) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = y.lo + (y.hi - y.lo) * k / 4.0;
    const double py = y.map(v, y0, f.top);
    o << "<line x1=\"" << fmt(x0 - 4) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(x0) << "\" y2=\""
      << fmt(py) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(py + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v) << "</text>\n";
  }
  if (y.lo < 0 && y.hi > 0) {
    const double pz = y.map(0, y0, f.top);
    o << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(pz) << "\" x2=\"" << fmt(x0 + f.plot_w())
      << "\" y2=\"" << fmt(pz) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  o << "<text x=\"16\" y=\"" << fmt(f.top + f.plot_h() / 2) << "\" transform=\"rotate(-90 16 "
    << fmt(f.top + f.plot_h() / 2) << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\">"
    << escape(label) << "</text>\n";
}

}  // namespace detail

struct Bar {
  std::string label;
  std::optional<double> value;  // empty cell: no bar, label kept
  std::optional<double> error;
};

/// Bar chart; missing values leave a gap marked "n/a".
inline std::string bar_chart(const std::string& title, const std::string& y_label,
                             const std::vector<Bar>& bars, Frame f = {}) {
  double lo = 0, hi = 0;
  for (const auto& b : bars) {
    if (!b.value) continue;
    const double e = b.error.value_or(0);
    lo = std::min(lo, *b.value - e);
    hi = std::max(hi, *b.value + e);
  }
  const Axis y = Axis::fit(lo, hi);
  std::ostringstream o;
  detail::header(o, f, title);
  detail::y_axis(o, f, y, y_label);
  const double slot = f.plot_w() / std::max<std::size_t>(1, bars.size());
  const double base = y.map(0, f.top + f.plot_h(), f.top);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double cx = f.left + slot * (static_cast<double>(i) + 0.5);
    const auto& b = bars[i];
    if (b.value) {
      const double py = y.map(*b.value, f.top + f.plot_h(), f.top);
      o << "<rect x=\"" << fmt(cx - slot * 0.35) << "\" y=\"" << fmt(std::min(py, base)) << "\" width=\""
        << fmt(slot * 0.7) << "\" height=\"" << fmt(std::fabs(base - py)) << "\" fill=\"" << palette(i)
        << "\"/>\n";
      if (b.error) {
        const double a = y.map(*b.value - *b.error, f.top + f.plot_h(), f.top);
        const double c = y.map(*b.value + *b.error, f.top + f.plot_h(), f.top);
        o << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(a) << "\" x2=\"" << fmt(cx) << "\" y2=\""
          << fmt(c) << "\" stroke=\"black\"/>\n";
      }
      o << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(std::min(py, base) - 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(*b.value)
        << "</text>\n";
    } else {
      o << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(base - 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">n/a</text>\n";
    }
    o << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(f.top + f.plot_h() + 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << escape(b.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline std::string line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<Series>& series,
                              Frame f = {}) {
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  bool any = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DataError("line_chart: x/y length mismatch in '" + s.name + "'");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        any = true;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  const Axis xa = xhi > xlo ? Axis{xlo, xhi} : Axis::fit(xlo, xhi);
  const Axis ya = Axis::fit(ylo, yhi);
  std::ostringstream o;
  detail::header(o, f, title);
  detail::y_axis(o, f, ya, y_label);
  const double y0 = f.top + f.plot_h();
  for (int k = 0; k <= 4; ++k) {
    const double v = xa.lo + (xa.hi - xa.lo) * k / 4.0;
    const double px = xa.map(v, f.left, f.left + f.plot_w());
    o << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(y0 + 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v) << "</text>\n";
  }
  o << "<text x=\"" << fmt(f.left + f.plot_w() / 2) << "\" y=\"" << fmt(f.height - 12)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label)
    << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    o << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) o << ' ';
      o << fmt(xa.map(s.x[i], f.left, f.left + f.plot_w())) << ',' << fmt(ya.map(s.y[i], y0, f.top));
    }
    o << "\"/>\n";
    const double ly = f.top + 14.0 * static_cast<double>(k) + 4;
    o << "<text x=\"" << fmt(f.left + f.plot_w() - 4) << "\" y=\"" << fmt(ly + 8) << "\" fill=\""
      << palette(k) << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

/// Trailing moving average; the first window-1 points average what exists.
inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
  std::vector<double> out(v.size());
  double acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    if (i >= window) acc -= v[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace asms::svg
