#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "asms/core.hpp"
#include "asms/error.hpp"
#include "asms/rng.hpp"

namespace asms::nn {

enum class Head : std::uint8_t { categorical_logits = 0, scalar = 1 };

struct LayerShape {
  int in = 0;
  int out = 0;

  std::size_t weight_count() const noexcept { return static_cast<std::size_t>(in) * out; }
  std::size_t param_count() const noexcept { return weight_count() + static_cast<std::size_t>(out); }
  bool operator==(const LayerShape&) const = default;
};

/// Flat parameter vector of a dense MLP. Per layer, the (in x out) weight
/// block comes first, stored input-major (w[j * out + i] connects input j to
/// output i), followed by the out biases. Hidden layers use `activation`; the
/// last layer is linear and feeds the head.
class ModelParams {
 public:
  ModelParams() = default;

  ModelParams(std::vector<LayerShape> shapes, Activation activation, Head head)
      : shapes_(std::move(shapes)), activation_(activation), head_(head) {
    if (shapes_.empty()) throw std::invalid_argument("MLP needs at least one layer");
    std::size_t total = 0;
    for (std::size_t l = 0; l < shapes_.size(); ++l) {
      if (shapes_[l].in < 1 || shapes_[l].out < 1) throw std::invalid_argument("layer dims must be >= 1");
      if (l > 0 && shapes_[l].in != shapes_[l - 1].out) {
        throw std::invalid_argument("layer shapes do not chain");
      }
      offsets_.push_back(total);
      total += shapes_[l].param_count();
    }
    values_.assign(total, 0.0);
  }

  static std::size_t count_for(const std::vector<LayerShape>& shapes) {
    std::size_t total = 0;
    for (const auto& s : shapes) total += s.param_count();
    return total;
  }

  const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }
  Activation activation() const noexcept { return activation_; }
  Head head() const noexcept { return head_; }
  std::size_t size() const noexcept { return values_.size(); }
  int input_dim() const noexcept { return shapes_.front().in; }
  int output_dim() const noexcept { return shapes_.back().out; }

  std::span<const double> values() const noexcept { return values_; }

  // Any mutable access invalidates outstanding forward caches.
  std::span<double> mutable_values() noexcept {
    ++generation_;
    return values_;
  }
  std::uint64_t generation() const noexcept { return generation_; }

  const double* weights(std::size_t layer) const noexcept { return values_.data() + offsets_[layer]; }
  const double* biases(std::size_t layer) const noexcept {
    return weights(layer) + shapes_[layer].weight_count();
  }
  std::size_t offset(std::size_t layer) const noexcept { return offsets_[layer]; }

  bool same_shape(const ModelParams& o) const noexcept {
    return shapes_ == o.shapes_ && activation_ == o.activation_ && head_ == o.head_;
  }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  // Bitwise parameter equality.
  bool operator==(const ModelParams& o) const noexcept {
    return same_shape(o) && values_.size() == o.values_.size() &&
           std::equal(values_.begin(), values_.end(), o.values_.begin(),
                      [](double a, double b) { return std::bit_cast<std::uint64_t>(a) ==
                                                      std::bit_cast<std::uint64_t>(b); });
  }

 private:
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
  Activation activation_ = Activation::tanh;
  Head head_ = Head::scalar;
  std::uint64_t generation_ = 0;
};

/// Glorot-uniform weights, zero biases. Layers: in -> hidden -> hidden -> out.
inline ModelParams init_mlp(int obs_dim, int hidden, int out_dim, Activation activation, Head head,
                            RngStream& rng) {
  ModelParams p({{obs_dim, hidden}, {hidden, hidden}, {hidden, out_dim}}, activation, head);
  auto v = p.mutable_values();
  for (std::size_t l = 0; l < p.shapes().size(); ++l) {
    const auto& s = p.shapes()[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    double* w = v.data() + p.offset(l);
    for (std::size_t k = 0; k < s.weight_count(); ++k) w[k] = rng.uniform(-limit, limit);
  }
  return p;
}

struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each hidden layer
  std::vector<double> output;
  std::uint64_t generation = 0;
  const ModelParams* owner = nullptr;
};

inline double activate(Activation a, double z) noexcept {
  return a == Activation::tanh ? std::tanh(z) : (z > 0 ? z : 0.0);
}

// d act / d z expressed through the pre-activation z and activation value h.
inline double activate_grad(Activation a, double z, double h) noexcept {
  return a == Activation::tanh ? 1.0 - h * h : (z > 0 ? 1.0 : 0.0);
}

inline void forward_into(const ModelParams& p, std::span<const double> x, ForwardCache& cache) {
  if (static_cast<int>(x.size()) != p.input_dim()) {
    throw DataError("forward: input length " + std::to_string(x.size()) + " != " +
                    std::to_string(p.input_dim()));
  }
  const auto& shapes = p.shapes();
  const std::size_t L = shapes.size();
  cache.inputs.resize(L);
  cache.pre.resize(L - 1);
  cache.inputs[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < L; ++l) {
    const auto& s = shapes[l];
    const double* w = p.weights(l);
    const double* b = p.biases(l);
    std::vector<double> z(b, b + s.out);
    const auto& in = cache.inputs[l];
    for (int j = 0; j < s.in; ++j) {
      const double xj = in[static_cast<std::size_t>(j)];
      const double* row = w + static_cast<std::size_t>(j) * s.out;
      for (int i = 0; i < s.out; ++i) z[static_cast<std::size_t>(i)] += row[i] * xj;
    }
    if (l + 1 < L) {
      std::vector<double>& next = cache.inputs[l + 1];
      next.resize(static_cast<std::size_t>(s.out));
      for (int i = 0; i < s.out; ++i) next[static_cast<std::size_t>(i)] = activate(p.activation(), z[static_cast<std::size_t>(i)]);
      cache.pre[l] = std::move(z);
    } else {
      cache.output = std::move(z);
    }
  }
  cache.generation = p.generation();
  cache.owner = &p;
}

/// Returns the raw network output (logits for a categorical head, a single
/// value for a scalar head) and the activations needed by backward().
inline std::pair<std::vector<double>, ForwardCache> forward(const ModelParams& p,
                                                            std::span<const double> x) {
  ForwardCache cache;
  forward_into(p, x, cache);
  return {cache.output, std::move(cache)};
}

namespace testing {
// Fault-injection hook: scales the weight gradient of layer 1. Stays 1.0
// outside negative-control checks.
inline double& layer1_grad_scale() noexcept {
  static double scale = 1.0;
  return scale;
}
}  // namespace testing

/// Adds d(output . out_grad)/d(params) into `grad`.
inline void backward_accumulate(const ModelParams& p, const ForwardCache& cache,
                                std::span<const double> out_grad, std::span<double> grad) {
  if (cache.owner != &p || cache.generation != p.generation()) {
    throw DataError("backward: cache does not belong to the current parameters");
  }
  if (static_cast<int>(out_grad.size()) != p.output_dim() || grad.size() != p.size()) {
    throw DataError("backward: gradient dimension mismatch");
  }
  const auto& shapes = p.shapes();
  std::vector<double> delta(out_grad.begin(), out_grad.end());
  for (std::size_t l = shapes.size(); l-- > 0;) {
    const auto& s = shapes[l];
    const auto& in = cache.inputs[l];
    double* gw = grad.data() + p.offset(l);
    double* gb = gw + s.weight_count();
    for (int i = 0; i < s.out; ++i) gb[i] += delta[static_cast<std::size_t>(i)];
    const double fault = l == 1 ? testing::layer1_grad_scale() : 1.0;
    for (int j = 0; j < s.in; ++j) {
      const double xj = in[static_cast<std::size_t>(j)] * fault;
      if (xj == 0.0) continue;
      double* row = gw + static_cast<std::size_t>(j) * s.out;
      for (int i = 0; i < s.out; ++i) row[i] += xj * delta[static_cast<std::size_t>(i)];
    }
    if (l == 0) break;
    // Propagate to the previous layer's activations, then through act'.
    const double* w = p.weights(l);
    std::vector<double> prev(static_cast<std::size_t>(s.in), 0.0);
    for (int j = 0; j < s.in; ++j) {
      const double* row = w + static_cast<std::size_t>(j) * s.out;
      double acc = 0;
      for (int i = 0; i < s.out; ++i) acc += row[i] * delta[static_cast<std::size_t>(i)];
      prev[static_cast<std::size_t>(j)] = acc;
    }
    const auto& z = cache.pre[l - 1];
    for (int j = 0; j < s.in; ++j) {
      const auto k = static_cast<std::size_t>(j);
      prev[k] *= activate_grad(p.activation(), z[k], in[k]);
    }
    delta = std::move(prev);
  }
}

inline std::vector<double> backward(const ModelParams& p, const ForwardCache& cache,
                                    std::span<const double> out_grad) {
  std::vector<double> grad(p.size(), 0.0);
  backward_accumulate(p, cache, out_grad, grad);
  return grad;
}

struct CategoricalDist {
  std::vector<double> probs;
  std::vector<double> log_probs;
  double entropy = 0;
};

/// Max-shifted softmax with log-probabilities and entropy.
inline CategoricalDist categorical_head(std::span<const double> logits) {
  CategoricalDist d;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (double l : logits) z += std::exp(l - m);
  const double log_z = m + std::log(z);
  d.probs.resize(logits.size());
  d.log_probs.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    d.log_probs[k] = logits[k] - log_z;
    d.probs[k] = std::exp(d.log_probs[k]);
    if (d.probs[k] > 0) d.entropy -= d.probs[k] * d.log_probs[k];
  }
  return d;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  bool operator==(const AdamState&) const = default;
};

struct AdamReport {
  bool applied = false;
  double grad_norm = 0;
  bool clipped = false;
};

/// Global-norm clip to `clip_norm` (disabled when <= 0), then one
/// bias-corrected Adam step. Non-finite gradients leave everything untouched.
inline AdamReport adam_step(ModelParams& params, AdamState& state, std::span<const double> grad,
                            double lr, double clip_norm) {
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DataError("adam_step: length mismatch");
  }
  AdamReport rep;
  double sq = 0;
  for (double g : grad) {
    if (!std::isfinite(g)) return rep;
    sq += g * g;
  }
  rep.grad_norm = std::sqrt(sq);
  if (!std::isfinite(rep.grad_norm)) return rep;
  double scale = 1.0;
  if (clip_norm > 0 && rep.grad_norm > clip_norm) {
    scale = clip_norm / rep.grad_norm;
    rep.clipped = true;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  auto theta = params.mutable_values();
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double g = grad[k] * scale;
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / bc1;
    const double v_hat = state.v[k] / bc2;
    theta[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
  rep.applied = true;
  return rep;
}

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t coords_checked = 0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

/// Central finite differences against an analytic gradient on a random
/// subsample of coordinates (all of them when the model is small).
inline GradCheckResult grad_check(const ModelParams& params,
                                  const std::function<double(const ModelParams&)>& loss,
                                  std::span<const double> analytic, RngStream& rng,
                                  std::size_t coords = 200, double h = 1e-5) {
  if (analytic.size() != params.size()) throw DataError("grad_check: gradient length mismatch");
  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (coords < idx.size()) {
    for (std::size_t i = 0; i < coords; ++i) {
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    }
    idx.resize(coords);
  }
  ModelParams probe = params;
  GradCheckResult res;
  for (std::size_t k : idx) {
    const double orig = probe.values()[k];
    probe.mutable_values()[k] = orig + h;
    const double up = loss(probe);
    probe.mutable_values()[k] = orig - h;
    const double down = loss(probe);
    probe.mutable_values()[k] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[k];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    const double rel = std::fabs(a - numeric) / denom;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_coord = k;
      res.worst_analytic = a;
      res.worst_numeric = numeric;
    }
    ++res.coords_checked;
  }
  return res;
}

}  // namespace asms::nn
