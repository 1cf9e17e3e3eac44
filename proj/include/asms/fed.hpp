#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "asms/checkpoint.hpp"
#include "asms/core.hpp"
#include "asms/error.hpp"
#include "asms/nn.hpp"
#include "asms/rl.hpp"
#include "asms/rng.hpp"

namespace asms::fed {

struct GlobalModel {
  int round = 0;
  nn::ModelParams policy;
  nn::ModelParams value;
};

struct LocalUpdate {
  int agent = 0;
  nn::ModelParams policy;
  nn::ModelParams value;
  double samples = 0;
  std::size_t bytes = 0;
};

/// Fresh actor (categorical head) and critic (scalar head) for the server.
inline GlobalModel init_global(int obs_dim, int hidden, int actions, const HyperParams& hp,
                               RngStream& rng) {
  GlobalModel g;
  g.policy = nn::init_mlp(obs_dim, hidden, actions, hp.actor_activation,
                          nn::Head::categorical_logits, rng);
  g.value = nn::init_mlp(obs_dim, hidden, 1, hp.critic_activation, nn::Head::scalar, rng);
  return g;
}

/// Bounds each coordinate of (updated - reference) to [-bound, bound].
inline nn::ModelParams clip_update(const nn::ModelParams& updated, const nn::ModelParams& reference,
                                   double bound) {
  if (!updated.same_shape(reference)) throw DataError("clip_update: shape mismatch");
  if (!(bound > 0)) throw DataError("clip_update: bound must be > 0");
  nn::ModelParams out = updated;
  auto v = out.mutable_values();
  const auto ref = reference.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = std::clamp(v[k] - ref[k], -bound, bound);
    // Keep untouched coordinates bit-identical.
    if (d != v[k] - ref[k]) v[k] = ref[k] + d;
  }
  return out;
}

/// Adds independent Laplace(sensitivity / epsilon) noise to every parameter.
inline nn::ModelParams ldp_perturb(const nn::ModelParams& params, double sensitivity,
                                   double epsilon, RngStream& rng) {
  if (!(epsilon > 0)) throw DataError("ldp_perturb: privacy budget must be > 0");
  if (sensitivity < 0) throw DataError("ldp_perturb: sensitivity must be >= 0");
  nn::ModelParams out = params;
  if (sensitivity == 0) return out;
  const double scale = sensitivity / epsilon;
  for (auto& v : out.mutable_values()) v += rng.laplace(scale);
  return out;
}

namespace detail {

// Weighted mean of one coordinate. Terms are summed in sorted order so the
// result does not depend on the order of the inputs; identical inputs are
// returned as-is and the result is kept inside [min, max] of the inputs.
inline void weighted_mean(std::span<const std::span<const double>> inputs,
                          std::span<const double> norm_weights, std::span<double> out) {
  const std::size_t n = inputs.size();
  std::vector<double> terms(n);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double lo = inputs[0][k], hi = inputs[0][k];
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, inputs[i][k]);
      hi = std::max(hi, inputs[i][k]);
    }
    if (lo == hi) {
      out[k] = inputs[0][k];
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) terms[i] = norm_weights[i] * inputs[i][k];
    std::sort(terms.begin(), terms.end());
    double acc = 0;
    for (double t : terms) acc += t;
    out[k] = std::clamp(acc, lo, hi);
  }
}

inline nn::ModelParams aggregate(const std::vector<const nn::ModelParams*>& models,
                                 std::span<const double> norm_weights) {
  nn::ModelParams out = *models.front();
  std::vector<std::span<const double>> inputs;
  for (const auto* m : models) {
    if (!m->same_shape(*models.front())) throw DataError("fedavg: model shape mismatch");
    inputs.push_back(m->values());
  }
  weighted_mean(inputs, norm_weights, out.mutable_values());
  return out;
}

}  // namespace detail

/// theta_G = sum_i (w_i / sum_j w_j) * theta_i, coordinate-wise, for both
/// networks. `round` is the index of the model being replaced.
inline GlobalModel fedavg(const std::vector<LocalUpdate>& updates, std::span<const double> weights,
                          int round = 0) {
  if (updates.empty()) throw DataError("fedavg: no updates");
  if (weights.size() != updates.size()) throw DataError("fedavg: one weight per update required");
  std::vector<double> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0;
  for (double w : sorted) {
    if (w < 0 || !std::isfinite(w)) throw DataError("fedavg: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0)) throw DataError("fedavg: weights sum to zero");
  std::vector<double> norm(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) norm[i] = weights[i] / total;

  std::vector<const nn::ModelParams*> pis, vs;
  for (const auto& u : updates) {
    pis.push_back(&u.policy);
    vs.push_back(&u.value);
  }
  GlobalModel g;
  g.round = round + 1;
  g.policy = detail::aggregate(pis, norm);
  g.value = detail::aggregate(vs, norm);
  return g;
}

inline std::size_t update_bytes(const nn::ModelParams& policy, const nn::ModelParams& value) {
  return nn::serialized_size(policy.shapes()) + nn::serialized_size(value.shapes());
}

struct RoundReport {
  int round = 0;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
  int agents = 0;
};

/// One synchronous aggregation: every agent bounds its change since the last
/// broadcast, perturbs it, uploads; the server averages with sample-count
/// weights and broadcasts the result back into every learner.
inline RoundReport fed_round(std::span<rl::Learner* const> learners, GlobalModel& global,
                             std::span<const double> sample_counts, const HyperParams& hp,
                             RngStream& rng) {
  if (learners.empty()) throw DataError("fed_round: no agents");
  if (sample_counts.size() != learners.size()) throw DataError("fed_round: one sample count per agent");
  std::vector<LocalUpdate> updates;
  RoundReport rep;
  rep.agents = static_cast<int>(learners.size());
  for (std::size_t i = 0; i < learners.size(); ++i) {
    LocalUpdate u;
    u.agent = static_cast<int>(i);
    u.samples = sample_counts[i];
    if (hp.ldp_enabled) {
      u.policy = ldp_perturb(clip_update(learners[i]->policy, global.policy, hp.ldp_clip),
                             hp.ldp_clip, hp.ldp_eps, rng);
      u.value = ldp_perturb(clip_update(learners[i]->value, global.value, hp.ldp_clip),
                            hp.ldp_clip, hp.ldp_eps, rng);
    } else {
      u.policy = learners[i]->policy;
      u.value = learners[i]->value;
    }
    u.bytes = update_bytes(u.policy, u.value);
    rep.bytes_up += u.bytes;
    updates.push_back(std::move(u));
  }
  std::vector<double> weights(sample_counts.begin(), sample_counts.end());
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0; })) {
    std::fill(weights.begin(), weights.end(), 1.0);
  }
  global = fedavg(updates, weights, global.round);
  rep.round = global.round;
  for (auto* l : learners) {
    l->policy = global.policy;
    l->value = global.value;
  }
  rep.bytes_down = update_bytes(global.policy, global.value) * learners.size();
  return rep;
}

}  // namespace asms::fed
