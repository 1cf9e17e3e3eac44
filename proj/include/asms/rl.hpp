#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "asms/core.hpp"
#include "asms/error.hpp"
#include "asms/netsim.hpp"
#include "asms/nn.hpp"
#include "asms/qoe.hpp"
#include "asms/rng.hpp"

namespace asms::rl {

inline constexpr int kObsDim = 6;
using ObsVec = std::array<double, kObsDim>;

/// Fixed affine feature scaling, clipped to [0, 5].
struct ObsScale {
  static constexpr double latency_ms = 200.0;
  static constexpr double jitter_ms = 50.0;
  static constexpr double packets = 100.0;
  static constexpr double clip_max = 5.0;
};

inline ObsVec normalize_obs(const Observation& o, double y_max) {
  ObsVec v{o.target_mbps / y_max,
           o.received_mbps / y_max,
           o.latency_ms / ObsScale::latency_ms,
           o.jitter_ms / ObsScale::jitter_ms,
           o.lost_packets / ObsScale::packets,
           o.nacks / ObsScale::packets};
  for (auto& x : v) x = std::clamp(x, 0.0, ObsScale::clip_max);
  return v;
}

struct ActionSample {
  std::size_t index = 0;
  double log_prob = 0;
  double entropy = 0;
};

inline std::size_t sample_categorical(std::span<const double> probs, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  // u landed in the rounding slack above the cumulative sum.
  for (std::size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0) return k;
  }
  return probs.size() - 1;
}

inline ActionSample select_action(const nn::ModelParams& policy, std::span<const double> obs,
                                  RngStream& rng) {
  const auto [logits, cache] = nn::forward(policy, obs);
  const auto dist = nn::categorical_head(logits);
  const auto k = sample_categorical(dist.probs, rng);
  return {k, dist.log_probs[k], dist.entropy};
}

inline std::size_t greedy_action(const nn::ModelParams& policy, std::span<const double> obs) {
  const auto [logits, cache] = nn::forward(policy, obs);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

inline double value_of(const nn::ModelParams& value, std::span<const double> obs) {
  return nn::forward(value, obs).first[0];
}

/// One agent's rollout segment plus the value of the state that follows it.
struct Trajectory {
  std::vector<ObsVec> obs;
  std::vector<std::size_t> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  double bootstrap_value = 0;
  bool complete = false;

  std::size_t size() const noexcept { return rewards.size(); }

  void clear() { *this = Trajectory{}; }
};

inline void require_complete(const Trajectory& t) {
  if (!t.complete || t.values.size() != t.rewards.size() || t.obs.size() != t.rewards.size() ||
      t.actions.size() != t.rewards.size() || t.log_probs.size() != t.rewards.size()) {
    throw DataError("trajectory is incomplete (missing bootstrap value or misaligned fields)");
  }
}

/// Advantages by the backward recursion A_t = delta_t + gamma * lambda * A_{t+1}.
inline std::vector<double> compute_gae(const Trajectory& t, double gamma, double lambda) {
  require_complete(t);
  const std::size_t n = t.size();
  std::vector<double> adv(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_v = i + 1 < n ? t.values[i + 1] : t.bootstrap_value;
    const double delta = t.rewards[i] + gamma * next_v - t.values[i];
    next_adv = delta + gamma * lambda * next_adv;
    adv[i] = next_adv;
  }
  return adv;
}

/// Discounted rewards to the end of the segment plus the discounted bootstrap.
inline std::vector<double> compute_returns(const Trajectory& t, double gamma) {
  require_complete(t);
  const std::size_t n = t.size();
  std::vector<double> ret(n, 0.0);
  double acc = t.bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    acc = t.rewards[i] + gamma * acc;
    ret[i] = acc;
  }
  return ret;
}

/// g(eps, A): (1 + eps) A for A >= 0, (1 - eps) A otherwise.
inline double clip_bound(double eps, double advantage) noexcept {
  return advantage >= 0 ? (1.0 + eps) * advantage : (1.0 - eps) * advantage;
}

inline double clipped_objective(double new_log_prob, double old_log_prob, double advantage,
                                double eps) noexcept {
  const double ratio = std::exp(new_log_prob - old_log_prob);
  return std::min(ratio * advantage, clip_bound(eps, advantage));
}

// True when the unclipped term is the active branch of the min, i.e. the
// sample carries policy gradient.
inline bool surrogate_active(double ratio, double advantage, double eps) noexcept {
  return ratio * advantage <= clip_bound(eps, advantage);
}

struct Sample {
  ObsVec obs{};
  std::size_t action = 0;
  double old_log_prob = 0;
  double advantage = 0;
  double ret = 0;
};

struct TrainBatch {
  std::vector<Sample> samples;
  std::size_t size() const noexcept { return samples.size(); }
};

/// Shifts and scales advantages to mean 0 and (population) std 1.
inline void whiten(std::vector<Sample>& s) {
  if (s.size() < 2) return;
  double mean = 0;
  for (const auto& x : s) mean += x.advantage;
  mean /= static_cast<double>(s.size());
  double var = 0;
  for (const auto& x : s) var += (x.advantage - mean) * (x.advantage - mean);
  const double sd = std::sqrt(var / static_cast<double>(s.size()));
  for (auto& x : s) {
    x.advantage -= mean;
    if (sd > 1e-12) x.advantage /= sd;
  }
}

inline TrainBatch build_batch(const std::vector<Trajectory>& trajectories, double gamma,
                              double lambda, bool whiten_advantages) {
  TrainBatch b;
  for (const auto& t : trajectories) {
    const auto adv = compute_gae(t, gamma, lambda);
    const auto ret = compute_returns(t, gamma);
    for (std::size_t i = 0; i < t.size(); ++i) {
      b.samples.push_back({t.obs[i], t.actions[i], t.log_probs[i], adv[i], ret[i]});
    }
  }
  if (whiten_advantages) whiten(b.samples);
  return b;
}

struct PolicyLoss {
  double loss = 0;  // -(mean surrogate) - entropy_coef * mean entropy
  double surrogate = 0;
  double entropy = 0;
  double mean_ratio = 0;
  double clip_fraction = 0;
  double max_ratio_dev = 0;  // max |ratio - 1|
};

/// Policy loss over `samples`, adding its gradient into `grad` when non-empty.
inline PolicyLoss policy_loss(const nn::ModelParams& policy, std::span<const Sample> samples,
                              double clip_eps, double entropy_coef, std::span<double> grad = {}) {
  PolicyLoss out;
  if (samples.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  nn::ForwardCache cache;
  std::vector<double> dlogits;
  for (const auto& s : samples) {
    nn::forward_into(policy, s.obs, cache);
    const auto dist = nn::categorical_head(cache.output);
    const double new_lp = dist.log_probs[s.action];
    const double ratio = std::exp(new_lp - s.old_log_prob);
    out.surrogate += clipped_objective(new_lp, s.old_log_prob, s.advantage, clip_eps) * inv_n;
    out.entropy += dist.entropy * inv_n;
    out.mean_ratio += ratio * inv_n;
    if (std::fabs(ratio - 1.0) > clip_eps) out.clip_fraction += inv_n;
    out.max_ratio_dev = std::max(out.max_ratio_dev, std::fabs(ratio - 1.0));
    if (grad.empty()) continue;
    const double coef = surrogate_active(ratio, s.advantage, clip_eps) ? ratio * s.advantage : 0.0;
    dlogits.assign(dist.probs.size(), 0.0);
    for (std::size_t k = 0; k < dist.probs.size(); ++k) {
      const double p = dist.probs[k];
      const double dlogp = (k == s.action ? 1.0 : 0.0) - p;
      const double dent = p > 0 ? -p * (dist.log_probs[k] + dist.entropy) : 0.0;
      dlogits[k] = -inv_n * (coef * dlogp + entropy_coef * dent);
    }
    nn::backward_accumulate(policy, cache, dlogits, grad);
  }
  out.loss = -out.surrogate - entropy_coef * out.entropy;
  return out;
}

/// Mean squared error between V(s) and the return targets; gradient added
/// into `grad` when non-empty.
inline double value_loss(const nn::ModelParams& value, std::span<const Sample> samples,
                         std::span<double> grad = {}) {
  if (samples.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  nn::ForwardCache cache;
  double loss = 0;
  for (const auto& s : samples) {
    nn::forward_into(value, s.obs, cache);
    const double err = cache.output[0] - s.ret;
    loss += err * err * inv_n;
    if (grad.empty()) continue;
    const double g[1] = {2.0 * err * inv_n};
    nn::backward_accumulate(value, cache, g, grad);
  }
  return loss;
}

struct PPOSettings {
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double lr = 3e-4;
  double grad_clip = 0.5;
  int epochs = 10;
  int minibatch = 64;

  static PPOSettings from(const HyperParams& hp) {
    return {hp.clip_eps, hp.entropy_coef, hp.lr, hp.grad_clip, hp.epochs, hp.minibatch};
  }
};

struct UpdateDiagnostics {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double clip_fraction = 0;
  double mean_ratio = 0;
  double first_minibatch_max_ratio_dev = 0;
  std::vector<double> value_loss_per_epoch;
  int minibatches = 0;
  int skipped_steps = 0;
  bool aborted = false;
};

struct Learner {
  nn::ModelParams policy;
  nn::ModelParams value;
  nn::AdamState policy_opt;
  nn::AdamState value_opt;

  Learner() = default;
  Learner(nn::ModelParams pi, nn::ModelParams v)
      : policy(std::move(pi)),
        value(std::move(v)),
        policy_opt(policy.size()),
        value_opt(value.size()) {}
};

/// Clipped-surrogate ascent on the policy and MSE descent on the value
/// network: `epochs` shuffled passes over the batch in minibatches. A
/// non-finite loss restores the pre-update parameters and sets `aborted`.
inline UpdateDiagnostics ppo_update(Learner& learner, const TrainBatch& batch,
                                    const PPOSettings& cfg, RngStream& rng) {
  if (batch.samples.empty()) throw DataError("ppo_update: empty batch");
  UpdateDiagnostics diag;
  const Learner snapshot = learner;
  std::vector<Sample> data = batch.samples;
  std::vector<double> gpi(learner.policy.size());
  std::vector<double> gv(learner.value.size());
  const std::size_t mb = static_cast<std::size_t>(std::max(1, cfg.minibatch));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = data.size(); i > 1; --i) {
      std::swap(data[i - 1], data[rng.below(i)]);
    }
    double epoch_vloss = 0;
    for (std::size_t start = 0; start < data.size(); start += mb) {
      const std::span<const Sample> part(data.data() + start, std::min(mb, data.size() - start));
      std::fill(gpi.begin(), gpi.end(), 0.0);
      std::fill(gv.begin(), gv.end(), 0.0);
      const auto pl = policy_loss(learner.policy, part, cfg.clip_eps, cfg.entropy_coef, gpi);
      const double vl = value_loss(learner.value, part, gv);
      if (!std::isfinite(pl.loss) || !std::isfinite(vl)) {
        learner = snapshot;
        diag.aborted = true;
        return diag;
      }
      if (diag.minibatches == 0) diag.first_minibatch_max_ratio_dev = pl.max_ratio_dev;
      const auto r1 = nn::adam_step(learner.policy, learner.policy_opt, gpi, cfg.lr, cfg.grad_clip);
      const auto r2 = nn::adam_step(learner.value, learner.value_opt, gv, cfg.lr, cfg.grad_clip);
      diag.skipped_steps += (r1.applied ? 0 : 1) + (r2.applied ? 0 : 1);
      const double w = static_cast<double>(part.size()) / static_cast<double>(data.size());
      epoch_vloss += vl * w;
      diag.policy_loss += pl.loss;
      diag.value_loss += vl;
      diag.entropy += pl.entropy;
      diag.clip_fraction += pl.clip_fraction;
      diag.mean_ratio += pl.mean_ratio;
      ++diag.minibatches;
    }
    diag.value_loss_per_epoch.push_back(epoch_vloss);
  }
  const double n = static_cast<double>(diag.minibatches);
  diag.policy_loss /= n;
  diag.value_loss /= n;
  diag.entropy /= n;
  diag.clip_fraction /= n;
  diag.mean_ratio /= n;
  return diag;
}

}  // namespace asms::rl
