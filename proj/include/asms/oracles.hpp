#pragma once

// Slow, obviously-correct reference computations used by the test suites and
// `asms verify`. None of them share code with the production paths.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "asms/nn.hpp"
#include "asms/rl.hpp"

namespace asms::oracle {

/// Max-min allocation by bisection on the water level.
inline std::vector<double> water_fill(std::span<const double> x, double capacity) {
  long double total = 0;
  for (double v : x) total += v;
  if (total <= capacity) return {x.begin(), x.end()};
  long double lo = 0, hi = *std::max_element(x.begin(), x.end());
  for (int it = 0; it < 200; ++it) {
    const long double mid = (lo + hi) / 2;
    long double s = 0;
    for (double v : x) s += std::min<long double>(v, mid);
    (s > capacity ? hi : lo) = mid;
  }
  std::vector<double> y;
  for (double v : x) y.push_back(static_cast<double>(std::min<long double>(v, lo)));
  return y;
}

/// A_t = sum_l (gamma*lambda)^l delta_{t+l}, every term formed explicitly.
inline std::vector<double> gae(const rl::Trajectory& t, double gamma, double lambda) {
  const std::size_t T = t.size();
  auto value_at = [&](std::size_t k) { return k < T ? t.values[k] : t.bootstrap_value; };
  std::vector<double> out(T, 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    long double acc = 0;
    for (std::size_t l = 0; s + l < T; ++l) {
      const long double delta = t.rewards[s + l] + gamma * value_at(s + l + 1) - value_at(s + l);
      acc += std::pow(static_cast<long double>(gamma * lambda), static_cast<long double>(l)) * delta;
    }
    out[s] = static_cast<double>(acc);
  }
  return out;
}

/// G_t = sum_i gamma^i r_{t+i} + gamma^{T-t} V(s_T).
inline std::vector<double> returns(const rl::Trajectory& t, double gamma) {
  const std::size_t T = t.size();
  std::vector<double> out(T, 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    long double acc = 0;
    for (std::size_t i = 0; s + i < T; ++i) {
      acc += std::pow(static_cast<long double>(gamma), static_cast<long double>(i)) * t.rewards[s + i];
    }
    acc += std::pow(static_cast<long double>(gamma), static_cast<long double>(T - s)) * t.bootstrap_value;
    out[s] = static_cast<double>(acc);
  }
  return out;
}

/// Per-coordinate weighted mean in extended precision.
inline std::vector<double> weighted_mean(const std::vector<std::vector<double>>& xs,
                                         const std::vector<double>& w) {
  long double total = 0;
  for (double v : w) total += v;
  std::vector<double> out(xs.front().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    long double acc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += static_cast<long double>(w[i]) * xs[i][k];
    out[k] = static_cast<double>(acc / total);
  }
  return out;
}

/// Straight-line MLP evaluation indexing the flat parameter vector directly.
inline std::vector<double> forward(const nn::ModelParams& p, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  const auto v = p.values();
  std::size_t off = 0;
  const auto& shapes = p.shapes();
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const int in = shapes[l].in, out = shapes[l].out;
    std::vector<double> z(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
      long double s = v[off + static_cast<std::size_t>(in * out + i)];
      for (int j = 0; j < in; ++j) s += static_cast<long double>(v[off + static_cast<std::size_t>(j * out + i)]) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = static_cast<double>(s);
    }
    off += static_cast<std::size_t>(in * out + out);
    if (l + 1 < shapes.size()) {
      for (auto& e : z) e = p.activation() == Activation::tanh ? std::tanh(e) : std::max(0.0, e);
    }
    a = std::move(z);
  }
  return a;
}

/// The clipped objective written case by case.
inline double clipped_objective(double ratio, double adv, double eps) {
  if (adv >= 0) return ratio > 1 + eps ? (1 + eps) * adv : ratio * adv;
  return ratio < 1 - eps ? (1 - eps) * adv : ratio * adv;
}

}  // namespace asms::oracle
