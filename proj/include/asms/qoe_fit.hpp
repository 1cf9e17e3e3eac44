#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "asms/config.hpp"
#include "asms/core.hpp"
#include "asms/csv.hpp"
#include "asms/error.hpp"
#include "asms/qoe.hpp"
#include "asms/rng.hpp"

namespace asms {

struct RatingStep {
  Observation obs;
  double frame_rate = 0;
  double users = 0;
};

struct RatingsRecord {
  std::string scenario;
  std::vector<RatingStep> trace;
  double mos = 0;
};

/// Candidate values per weight, searched as a full Cartesian product.
struct CoefficientGrid {
  std::vector<double> alpha, beta, gamma, delta1, delta2;

  static CoefficientGrid uniform(double lo, double hi, double step) {
    std::vector<double> v;
    const int n = static_cast<int>(std::llround((hi - lo) / step));
    for (int i = 0; i <= n; ++i) v.push_back(std::round((lo + i * step) * 1e12) / 1e12);
    return {v, v, v, v, v};
  }

  static CoefficientGrid standard() { return uniform(0.0, 1.0, 0.1); }

  std::array<const std::vector<double>*, 5> axes() const {
    return {&alpha, &beta, &gamma, &delta1, &delta2};
  }

  std::size_t size() const {
    return alpha.size() * beta.size() * gamma.size() * delta1.size() * delta2.size();
  }
};

struct FitResult {
  QoECoefficients coefficients;
  double rmse = 0;
  double r_squared = 0;
  double scale = 0;   // MOS ~ scale * QoE + offset
  double offset = 0;
  std::size_t candidates = 0;
};

struct SensitivityRow {
  std::string coefficient;
  double minus20_delta = 0;  // RMSE(c * 0.8) - RMSE(c)
  double plus20_delta = 0;   // RMSE(c * 1.2) - RMSE(c)
  double minus20_pct = 0;    // relative to baseline RMSE, percent
  double plus20_pct = 0;
};

struct SensitivityReport {
  double baseline_rmse = 0;
  std::vector<SensitivityRow> rows;
  double mean_abs_delta = 0;
  double mean_abs_pct = 0;
};

namespace fit_detail {

using Features = std::array<double, 5>;

inline void require(const std::vector<RatingsRecord>& records) {
  if (records.size() < 2) throw DataError("QoE fitting needs at least two ratings records");
  for (const auto& r : records) {
    if (r.trace.empty()) throw DataError("ratings record for '" + r.scenario + "' has no trace");
  }
}

// Trace-mean of each unweighted term. The last step has no successor, so its
// stability term is zero.
inline Features mean_terms(const RatingsRecord& r, const QoECoefficients& aux) {
  Features f{};
  const auto n = r.trace.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = r.trace[i];
    const double y_next = i + 1 < n ? r.trace[i + 1].obs.received_mbps : s.obs.received_mbps;
    const auto t = qoe_terms(s.obs, s.frame_rate, y_next, s.users, aux);
    f[0] += t.scene;
    f[1] -= t.choppiness;
    f[2] -= t.latency;
    f[3] -= t.stability;
    f[4] -= t.disruption;
  }
  for (auto& v : f) v /= static_cast<double>(n);
  return f;
}

struct Affine {
  double scale = 0, offset = 0, rmse = 0, r_squared = 0;
};

// Least-squares MOS ~ scale * pred + offset with scale >= 0.
inline Affine affine_fit(const std::vector<double>& pred, const std::vector<double>& mos) {
  const double n = static_cast<double>(pred.size());
  double mp = 0, mm = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mm += mos[i];
  }
  mp /= n;
  mm /= n;
  double spp = 0, spm = 0, smm = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    spm += (pred[i] - mp) * (mos[i] - mm);
    smm += (mos[i] - mm) * (mos[i] - mm);
  }
  Affine a;
  a.scale = spp > 0 ? std::max(0.0, spm / spp) : 0.0;
  a.offset = mm - a.scale * mp;
  double sse = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = a.scale * pred[i] + a.offset - mos[i];
    sse += e * e;
  }
  a.rmse = std::sqrt(sse / n);
  a.r_squared = smm > 0 ? 1.0 - sse / smm : (sse == 0 ? 1.0 : 0.0);
  return a;
}

inline Affine evaluate(const std::vector<Features>& feats, const std::vector<double>& mos,
                       const std::array<double, 5>& w) {
  std::vector<double> pred(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    double p = 0;
    for (int k = 0; k < 5; ++k) p += w[k] * feats[i][k];
    pred[i] = p;
  }
  return affine_fit(pred, mos);
}

inline std::array<double, 5> weights_of(const QoECoefficients& c) {
  return {c.alpha, c.beta, c.gamma, c.delta1, c.delta2};
}

}  // namespace fit_detail

/// Predicted (unscaled) QoE of a record: the mean of compute_qoe over its trace.
inline double predicted_qoe(const RatingsRecord& r, const QoECoefficients& c) {
  const auto f = fit_detail::mean_terms(r, c);
  const auto w = fit_detail::weights_of(c);
  double p = 0;
  for (int k = 0; k < 5; ++k) p += w[k] * f[k];
  return p;
}

/// Exhaustive grid search for the weights minimising RMSE against MOS after
/// an affine rescale. Equal RMSE keeps the earlier candidate in lexicographic
/// (alpha, beta, gamma, delta1, delta2) order.
inline FitResult fit_coefficients(const std::vector<RatingsRecord>& records,
                                  const CoefficientGrid& grid,
                                  const QoECoefficients& aux = QoECoefficients{}) {
  fit_detail::require(records);
  for (const auto* axis : grid.axes()) {
    if (axis->empty()) throw DataError("QoE fitting grid has an empty axis");
  }
  std::vector<fit_detail::Features> feats;
  std::vector<double> mos;
  for (const auto& r : records) {
    feats.push_back(fit_detail::mean_terms(r, aux));
    mos.push_back(r.mos);
  }

  FitResult best;
  best.rmse = std::numeric_limits<double>::infinity();
  std::array<double, 5> w{};
  std::size_t count = 0;
  for (double a : grid.alpha) {
    for (double b : grid.beta) {
      for (double g : grid.gamma) {
        for (double d1 : grid.delta1) {
          for (double d2 : grid.delta2) {
            w = {a, b, g, d1, d2};
            const auto fit = fit_detail::evaluate(feats, mos, w);
            ++count;
            if (fit.rmse < best.rmse - 1e-12 * (1.0 + best.rmse) || count == 1) {
              best.coefficients = aux;
              best.coefficients.alpha = a;
              best.coefficients.beta = b;
              best.coefficients.gamma = g;
              best.coefficients.delta1 = d1;
              best.coefficients.delta2 = d2;
              best.rmse = fit.rmse;
              best.r_squared = fit.r_squared;
              best.scale = fit.scale;
              best.offset = fit.offset;
            }
          }
        }
      }
    }
  }
  best.candidates = count;
  return best;
}

/// RMSE response to scaling each weight by 0.8 and 1.2 with the others fixed.
inline SensitivityReport coefficient_sensitivity(const QoECoefficients& c,
                                                 const std::vector<RatingsRecord>& records) {
  fit_detail::require(records);
  std::vector<fit_detail::Features> feats;
  std::vector<double> mos;
  for (const auto& r : records) {
    feats.push_back(fit_detail::mean_terms(r, c));
    mos.push_back(r.mos);
  }
  const auto base_w = fit_detail::weights_of(c);
  SensitivityReport rep;
  rep.baseline_rmse = fit_detail::evaluate(feats, mos, base_w).rmse;
  static const char* names[5] = {"alpha", "beta", "gamma", "delta1", "delta2"};
  double sum_abs = 0, sum_pct = 0;
  for (int k = 0; k < 5; ++k) {
    SensitivityRow row;
    row.coefficient = names[k];
    auto w = base_w;
    w[k] = base_w[k] * 0.8;
    row.minus20_delta = fit_detail::evaluate(feats, mos, w).rmse - rep.baseline_rmse;
    w[k] = base_w[k] * 1.2;
    row.plus20_delta = fit_detail::evaluate(feats, mos, w).rmse - rep.baseline_rmse;
    // Percentages are undefined against an exact fit.
    if (rep.baseline_rmse > 1e-9) {
      row.minus20_pct = 100.0 * row.minus20_delta / rep.baseline_rmse;
      row.plus20_pct = 100.0 * row.plus20_delta / rep.baseline_rmse;
    } else {
      row.minus20_pct = row.plus20_pct = std::numeric_limits<double>::quiet_NaN();
    }
    sum_abs += std::fabs(row.minus20_delta) + std::fabs(row.plus20_delta);
    sum_pct += std::fabs(row.minus20_pct) + std::fabs(row.plus20_pct);
    rep.rows.push_back(row);
  }
  rep.mean_abs_delta = sum_abs / 10.0;
  rep.mean_abs_pct = sum_pct / 10.0;
  return rep;
}

/// Reads (scenario, step, x, y, l, j, p, n, f, u, mos). A new record starts
/// whenever the scenario changes or the step counter does not increase.
inline std::vector<RatingsRecord> read_ratings_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  static const char* required[] = {"scenario", "step", "x", "y", "l", "j",
                                   "p",        "n",    "f", "u", "mos"};
  int col[11];
  for (int i = 0; i < 11; ++i) {
    col[i] = table.column(required[i]);
    if (col[i] < 0) {
      throw DataError(path.string() + ": missing column '" + std::string(required[i]) + "'");
    }
  }
  if (table.rows.empty()) throw DataError(path.string() + ": no ratings rows");
  std::vector<RatingsRecord> records;
  double last_step = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    auto num = [&](int c) { return csv::to_double(row[static_cast<std::size_t>(col[c])], path, line); };
    const std::string& scenario = row[static_cast<std::size_t>(col[0])];
    const double step = num(1);
    RatingStep s;
    s.obs = {num(2), num(3), num(4), num(5), num(6), num(7)};
    s.frame_rate = num(8);
    s.users = num(9);
    const double mos = num(10);
    if (!s.obs.valid()) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": observation violates invariants");
    }
    if (mos < 1.0 || mos > 5.0) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": mos outside [1, 5]");
    }
    const bool new_record =
        records.empty() || records.back().scenario != scenario || step <= last_step;
    if (new_record) {
      records.push_back({scenario, {}, mos});
    } else if (records.back().mos != mos) {
      throw DataError(path.string() + ":" + std::to_string(line) +
                      ": mos changes within one trial");
    }
    records.back().trace.push_back(s);
    last_step = step;
  }
  return records;
}

inline void write_ratings_csv(const std::filesystem::path& path,
                              const std::vector<RatingsRecord>& records) {
  csv::Writer w(path, {"scenario", "step", "x", "y", "l", "j", "p", "n", "f", "u", "mos"});
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& s = r.trace[i];
      w.row({r.scenario, std::to_string(i), csv::exact(s.obs.target_mbps),
             csv::exact(s.obs.received_mbps), csv::exact(s.obs.latency_ms),
             csv::exact(s.obs.jitter_ms), csv::exact(s.obs.lost_packets), csv::exact(s.obs.nacks),
             csv::exact(s.frame_rate), csv::exact(s.users), csv::exact(r.mos)});
    }
  }
}

/// Grid file: one `name = v1, v2, ...` line per weight; missing weights use
/// the standard 0..1 step 0.1 axis.
inline CoefficientGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grid file '" + path.string() + "'");
  auto grid = CoefficientGrid::standard();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = line;
    if (auto h = sv.find('#'); h != std::string_view::npos) sv = sv.substr(0, h);
    sv = config_detail::trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", line_no, "malformed grid line");
    const std::string key(config_detail::trim(sv.substr(0, eq)));
    std::vector<double> values;
    try {
      values = config_detail::parse_doubles(sv.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ConfigError(key, line_no, e.what());
    }
    if (values.empty()) throw ConfigError(key, line_no, "empty grid axis");
    if (key == "alpha") grid.alpha = values;
    else if (key == "beta") grid.beta = values;
    else if (key == "gamma") grid.gamma = values;
    else if (key == "delta1") grid.delta1 = values;
    else if (key == "delta2") grid.delta2 = values;
    else throw ConfigError(key, line_no, "unknown grid axis");
  }
  return grid;
}

/// Builds ratings whose MOS is an exact affine image of the generating
/// coefficients' predicted QoE, plus optional Gaussian noise. Each record holds
/// one viewing condition with the five impairments drawn independently, so
/// every weight moves the prediction by a comparable amount. Record labels
/// cycle through the built-in scenario names.
inline std::vector<RatingsRecord> make_synthetic_ratings(const QoECoefficients& truth,
                                                         int trials_per_scenario,
                                                         double noise_sigma, std::uint64_t seed,
                                                         int trace_len = 10) {
  if (trials_per_scenario <= 0 || trace_len <= 1) {
    throw UsageError("synthetic ratings need at least one trial and two steps per trace");
  }
  RngStream cond(seed, StreamKind::misc, 11);
  RngStream noise(seed, StreamKind::misc, 12);
  RngStream jitter(seed, StreamKind::misc, 13);
  std::vector<RatingsRecord> records;
  for (const auto& spec : builtin_scenarios()) {
    for (int trial = 0; trial < trials_per_scenario; ++trial) {
      RatingsRecord rec;
      rec.scenario = spec.name;
      const double users = 1.0 + static_cast<double>(cond.below(6));
      const double level = truth.y_min * std::exp(cond.uniform(0.5, 4.0));
      const double swing = cond.uniform(0.0, 3.0);        // |q(y') - q(y)|
      const double fps_drop = cond.uniform(0.0, 5.0);     // f_target - f
      const double ms_per_mbps = cond.uniform(0.0, 10.0);  // l / y
      const double excess_loss = cond.uniform(-2.0, 4.0);  // p - p_threshold
      for (int t = 0; t < trace_len; ++t) {
        const double y = level * std::exp((t % 2 ? 0.5 : -0.5) * swing);
        const double f = truth.f_target - fps_drop;
        const double x = f > 0 ? y * truth.f_target / f : y;
        const double p =
            std::max(0.0, std::round(truth.p_threshold + excess_loss + jitter.uniform(-0.5, 0.5)));
        rec.trace.push_back({{x, y, ms_per_mbps * y, jitter.uniform(0.0, 5.0), p, p}, f, users});
      }
      records.push_back(std::move(rec));
    }
  }
  // Map predictions affinely onto [1.5, 4.5] so noise rarely leaves [1, 5].
  std::vector<double> pred;
  for (const auto& r : records) pred.push_back(predicted_qoe(r, truth));
  const auto [lo_it, hi_it] = std::minmax_element(pred.begin(), pred.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = hi > lo ? 3.0 / (hi - lo) : 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    double mos = 1.5 + scale * (pred[i] - lo);
    if (noise_sigma > 0) mos += noise.normal(0.0, noise_sigma);
    records[i].mos = std::clamp(mos, 1.0, 5.0);
  }
  return records;
}

}  // namespace asms
