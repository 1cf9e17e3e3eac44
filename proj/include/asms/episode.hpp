#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "asms/baselines.hpp"
#include "asms/core.hpp"
#include "asms/error.hpp"
#include "asms/netsim.hpp"
#include "asms/nn.hpp"
#include "asms/qoe.hpp"
#include "asms/rl.hpp"
#include "asms/rng.hpp"

namespace asms {

inline double apply_delta(double target, double delta, double y_min, double y_max) noexcept {
  return std::clamp(target + delta, y_min, y_max);
}

/// One agent's view of one step, for trace export.
struct TraceRow {
  int t = 0;
  int agent = 0;
  Observation obs;
  double frame_rate = 0;
  double capacity = 0;
  double users = 0;
  double qoe = 0;
};

using TraceSink = std::function<void(const TraceRow&)>;

struct EpisodeStats {
  std::vector<double> rewards;         // global reward per step
  std::vector<double> agent_mean_qoe;  // per agent, mean over steps
  double mean_reward = 0;
  double mean_latency = 0;
  double mean_lost_packets = 0;
  double mean_frame_rate = 0;
  double mean_received = 0;
};

namespace episode_detail {

// Scores the outcome of the joint targets. The stability term pairs each
// agent's new received rate with the one it replaced.
struct StepScore {
  std::vector<double> qoe;
  double reward = 0;
};

inline StepScore score_step(const NetworkEnv::Step& step, std::span<const Observation> previous,
                            const QoECoefficients& c, RewardMode mode) {
  StepScore s;
  s.qoe.resize(step.observations.size());
  for (std::size_t i = 0; i < step.observations.size(); ++i) {
    s.qoe[i] = compute_qoe(step.observations[i], step.outcome.agents[i].frame_rate,
                           previous[i].received_mbps, step.outcome.users, c);
  }
  s.reward = global_reward(s.qoe, mode);
  return s;
}

inline void accumulate(EpisodeStats& st, const NetworkEnv::Step& step, const StepScore& score) {
  st.rewards.push_back(score.reward);
  if (st.agent_mean_qoe.empty()) st.agent_mean_qoe.assign(score.qoe.size(), 0.0);
  for (std::size_t i = 0; i < score.qoe.size(); ++i) st.agent_mean_qoe[i] += score.qoe[i];
  const double n = static_cast<double>(step.observations.size());
  for (std::size_t i = 0; i < step.observations.size(); ++i) {
    st.mean_latency += step.observations[i].latency_ms / n;
    st.mean_lost_packets += step.observations[i].lost_packets / n;
    st.mean_frame_rate += step.outcome.agents[i].frame_rate / n;
    st.mean_received += step.observations[i].received_mbps / n;
  }
}

inline void finish(EpisodeStats& st) {
  const double steps = static_cast<double>(std::max<std::size_t>(1, st.rewards.size()));
  for (auto& q : st.agent_mean_qoe) q /= steps;
  double sum = 0;
  for (double r : st.rewards) sum += r;
  st.mean_reward = sum / steps;
  st.mean_latency /= steps;
  st.mean_lost_packets /= steps;
  st.mean_frame_rate /= steps;
  st.mean_received /= steps;
}

inline void emit_trace(const TraceSink& sink, const NetworkEnv::Step& step, const StepScore& score) {
  if (!sink) return;
  for (std::size_t i = 0; i < step.observations.size(); ++i) {
    sink({step.link.t, static_cast<int>(i), step.observations[i], step.outcome.agents[i].frame_rate,
          step.outcome.capacity, step.outcome.users, score.qoe[i]});
  }
}

}  // namespace episode_detail

/// Decision rule for one agent during evaluation.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset() {}
  virtual std::size_t choose(const Observation& obs) = 0;
};

class PolicyController : public Controller {
 public:
  // greedy: argmax of the logits; otherwise samples from `rng`.
  PolicyController(nn::ModelParams policy, double y_max, bool greedy, RngStream rng)
      : policy_(std::move(policy)), y_max_(y_max), greedy_(greedy), rng_(rng) {}

  std::size_t choose(const Observation& obs) override {
    const auto v = rl::normalize_obs(obs, y_max_);
    return greedy_ ? rl::greedy_action(policy_, v) : rl::select_action(policy_, v, rng_).index;
  }

 private:
  nn::ModelParams policy_;
  double y_max_;
  bool greedy_;
  RngStream rng_;
};

class RandomController : public Controller {
 public:
  RandomController(std::size_t actions, RngStream rng) : actions_(actions), rng_(rng) {}
  std::size_t choose(const Observation&) override { return rng_.below(actions_); }

 private:
  std::size_t actions_;
  RngStream rng_;
};

class DelayGradientAgent : public Controller {
 public:
  DelayGradientAgent(DeltaTable table, double p_threshold) : table_(std::move(table)) {
    params_.p_threshold = p_threshold;
  }
  void reset() override { state_ = {}; }
  std::size_t choose(const Observation& obs) override {
    auto d = baselines::delay_gradient_controller(state_, obs, table_, params_);
    state_ = std::move(d.state);
    return d.action.index;
  }

 private:
  DeltaTable table_;
  baselines::DelayGradientParams params_;
  baselines::ControllerState state_;
};

class BandwidthProbeAgent : public Controller {
 public:
  explicit BandwidthProbeAgent(DeltaTable table) : table_(std::move(table)) {}
  void reset() override { state_ = {}; }
  std::size_t choose(const Observation& obs) override {
    auto d = baselines::bandwidth_probe_controller(state_, obs, table_);
    state_ = std::move(d.state);
    return d.action.index;
  }

 private:
  DeltaTable table_;
  baselines::ControllerState state_;
};

/// Plays one episode with fixed controllers (no learning).
inline EpisodeStats run_controlled_episode(NetworkEnv& env, const ScenarioSpec& scenario,
                                           std::span<const std::unique_ptr<Controller>> controllers,
                                           const QoECoefficients& qoe, RewardMode mode,
                                           const TraceSink& trace = nullptr) {
  if (controllers.size() != static_cast<std::size_t>(env.agents())) {
    throw DataError("controller count does not match agent count");
  }
  for (const auto& c : controllers) c->reset();
  auto obs = env.reset(scenario);
  const auto& table = env.sim().delta_table;
  EpisodeStats st;
  std::vector<double> targets(obs.size());
  while (!env.done()) {
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto k = controllers[i]->choose(obs[i]);
      targets[i] = apply_delta(obs[i].target_mbps, table[k], qoe.y_min, env.sim().y_max);
    }
    auto step = env.step(targets);
    const auto score = episode_detail::score_step(step, obs, qoe, mode);
    episode_detail::accumulate(st, step, score);
    episode_detail::emit_trace(trace, step, score);
    obs = std::move(step.observations);
  }
  episode_detail::finish(st);
  return st;
}

/// A learning agent: networks, optimiser state, private RNG and the rollout
/// segments collected since its last update.
struct TrainAgent {
  rl::Learner learner;
  RngStream rng;
  std::vector<rl::Trajectory> buffer;
  std::size_t buffered_steps = 0;

  TrainAgent(rl::Learner l, RngStream r) : learner(std::move(l)), rng(r) {}
};

struct EpisodeResult {
  EpisodeStats stats;
  std::vector<std::vector<rl::Trajectory>> trajectories;  // per agent, per segment
};

/// Called when an agent closes a rollout segment (after its bootstrap value
/// is filled in).
using SegmentHook = std::function<void(std::size_t agent, const rl::Trajectory& segment)>;

/// Runs T steps with every agent sampling from its current policy. Each step
/// all agents receive the same global reward. Segments are closed every
/// min(policy_update_freq, T) steps and at the episode end.
inline EpisodeResult run_episode(NetworkEnv& env, const ScenarioSpec& scenario,
                                 std::span<TrainAgent> agents, const HyperParams& hp,
                                 const QoECoefficients& qoe, RewardMode mode,
                                 const SegmentHook& on_segment = nullptr,
                                 const TraceSink& trace = nullptr) {
  if (agents.size() != static_cast<std::size_t>(env.agents())) {
    throw DataError("agent count " + std::to_string(agents.size()) +
                    " does not match environment agent count " + std::to_string(env.agents()));
  }
  const std::size_t n = agents.size();
  const auto& table = env.sim().delta_table;
  const double y_max = env.sim().y_max;
  const int segment_len = std::min(hp.policy_update_freq, env.episode_len());
  EpisodeResult res;
  res.trajectories.resize(n);
  std::vector<rl::Trajectory> current(n);
  auto obs = env.reset(scenario);
  std::vector<double> targets(n);
  std::vector<rl::ObsVec> feats(n);

  auto close_segments = [&](const std::vector<Observation>& next_obs) {
    for (std::size_t i = 0; i < n; ++i) {
      auto& seg = current[i];
      seg.bootstrap_value = rl::value_of(agents[i].learner.value, rl::normalize_obs(next_obs[i], y_max));
      seg.complete = true;
      res.trajectories[i].push_back(seg);
      if (on_segment) on_segment(i, seg);
      seg.clear();
    }
  };

  while (!env.done()) {
    for (std::size_t i = 0; i < n; ++i) {
      auto& a = agents[i];
      feats[i] = rl::normalize_obs(obs[i], y_max);
      const auto act = rl::select_action(a.learner.policy, feats[i], a.rng);
      auto& seg = current[i];
      seg.obs.push_back(feats[i]);
      seg.actions.push_back(act.index);
      seg.log_probs.push_back(act.log_prob);
      seg.values.push_back(rl::value_of(a.learner.value, feats[i]));
      targets[i] = apply_delta(obs[i].target_mbps, table[act.index], qoe.y_min, y_max);
    }
    auto step = env.step(targets);
    const auto score = episode_detail::score_step(step, obs, qoe, mode);
    episode_detail::accumulate(res.stats, step, score);
    episode_detail::emit_trace(trace, step, score);
    for (auto& seg : current) seg.rewards.push_back(score.reward);
    obs = std::move(step.observations);
    if (static_cast<int>(current[0].size()) >= segment_len || env.done()) close_segments(obs);
  }
  episode_detail::finish(res.stats);
  return res;
}

}  // namespace asms
