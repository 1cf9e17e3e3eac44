#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "asms/core.hpp"
#include "asms/error.hpp"
#include "asms/rng.hpp"

namespace asms {

struct LinkState {
  int t = 0;
  double capacity = 0;      // Mbps
  double base_latency = 0;  // ms
  double base_jitter = 0;   // ms
  Range jitter_range;       // per-agent jitter draws come from here
  double loss_rate = 0;
  double burst_loss = 0;  // added to loss_rate while a burst is active
  bool burst_active = false;
  double users = 0;  // u_t
};

struct AgentOutcome {
  double received_mbps = 0;
  double latency_ms = 0;
  double jitter_ms = 0;
  double lost_packets = 0;
  double nacks = 0;
  double frame_rate = 0;
  double sent_packets = 0;
};

struct LinkOutcome {
  std::vector<AgentOutcome> agents;
  double capacity = 0;
  double users = 0;
};

/// Physical constants of the bottleneck model.
struct LinkModel {
  double packet_size = 1200.0;  // bytes
  double latency_kappa = 1.0;
  double congestion_loss = 0.05;
  double f_target = 60.0;
  double eps_small = 1e-6;

  static LinkModel from(const SimConfig& sim, const QoECoefficients& qoe) {
    return {sim.packet_size, sim.latency_kappa, sim.congestion_loss, qoe.f_target, qoe.eps_small};
  }
};

inline LinkState sample_link_state(const ScenarioSpec& spec, int t, int episode_len, double users,
                                   RngStream& rng) {
  auto draw = [&](const Ramp& r) {
    const Range range = r.at(t, episode_len);
    return rng.uniform(range.lo, range.hi);
  };
  LinkState s;
  s.t = t;
  s.capacity = draw(spec.bandwidth_mbps);
  s.base_latency = draw(spec.latency_ms);
  s.jitter_range = spec.jitter_ms.at(t, episode_len);
  s.base_jitter = rng.uniform(s.jitter_range.lo, s.jitter_range.hi);
  s.loss_rate = std::clamp(draw(spec.loss_rate), 0.0, 1.0);
  s.burst_loss = std::clamp(draw(spec.burst_loss), 0.0, 1.0);
  // Burst probability and burst severity share the same table column.
  s.burst_active = rng.bernoulli(s.burst_loss);
  s.users = users;
  return s;
}

/// Max-min fair (water-filling) split of `capacity` among `targets`.
inline std::vector<double> allocate_max_min(std::span<const double> targets, double capacity) {
  const std::size_t n = targets.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double total = std::accumulate(targets.begin(), targets.end(), 0.0);
  if (total <= capacity) {
    std::copy(targets.begin(), targets.end(), out.begin());
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
  double remaining = capacity;
  std::size_t k = 0;
  // Satisfy demands below the current fair level, smallest first.
  for (; k < n; ++k) {
    const double level = remaining / static_cast<double>(n - k);
    const double demand = targets[order[k]];
    if (demand > level) break;
    out[order[k]] = demand;
    remaining -= demand;
  }
  if (k < n) {
    const double level = std::max(0.0, remaining / static_cast<double>(n - k));
    for (std::size_t i = k; i < n; ++i) out[order[i]] = level;
  }
  return out;
}

/// One simulated second of the shared link for the joint `targets`.
inline LinkOutcome advance_link(const LinkState& state, std::span<const double> targets,
                                const LinkModel& model, RngStream& rng) {
  LinkOutcome result;
  result.capacity = state.capacity;
  result.users = state.users;
  const double demand = std::accumulate(targets.begin(), targets.end(), 0.0);
  const double load = state.capacity > 0 ? demand / state.capacity : (demand > 0 ? 1e9 : 0.0);
  const double utilization = std::min(1.0, load);
  const double latency = state.base_latency * (1.0 + model.latency_kappa * utilization * utilization);
  double loss = state.loss_rate + (state.burst_active ? state.burst_loss : 0.0) +
                model.congestion_loss * std::max(0.0, load - 1.0);
  loss = std::clamp(loss, 0.0, 1.0);

  const auto received = allocate_max_min(targets, state.capacity);
  result.agents.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& a = result.agents[i];
    a.received_mbps = std::min(received[i], targets[i]);
    a.latency_ms = latency;
    a.jitter_ms = rng.uniform(state.jitter_range.lo, state.jitter_range.hi);
    a.sent_packets = std::ceil(a.received_mbps * 1e6 / (8.0 * model.packet_size));
    a.lost_packets = static_cast<double>(
        rng.binomial(static_cast<std::uint64_t>(a.sent_packets), loss));
    a.nacks = a.lost_packets;
    a.frame_rate =
        model.f_target * std::min(1.0, a.received_mbps / std::max(targets[i], model.eps_small));
  }
  return result;
}

inline std::vector<Observation> observations_from(const LinkOutcome& outcome,
                                                  std::span<const double> targets) {
  std::vector<Observation> obs(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& a = outcome.agents[i];
    obs[i] = {targets[i], a.received_mbps, a.latency_ms, a.jitter_ms, a.lost_packets, a.nacks};
  }
  return obs;
}

/// N agents sharing one bottleneck under a scenario, stepped once per second.
class NetworkEnv {
 public:
  struct Step {
    LinkState link;
    LinkOutcome outcome;
    std::vector<Observation> observations;
  };

  NetworkEnv(SimConfig sim, QoECoefficients qoe, int episode_len, RngStream rng)
      : sim_(std::move(sim)),
        model_(LinkModel::from(sim_, qoe)),
        episode_len_(episode_len),
        rng_(rng) {}

  int agents() const noexcept { return sim_.agents; }
  int t() const noexcept { return t_; }
  int episode_len() const noexcept { return episode_len_; }
  const ScenarioSpec& scenario() const noexcept { return scenario_; }
  const SimConfig& sim() const noexcept { return sim_; }
  const LinkModel& model() const noexcept { return model_; }

  // Initial observations: every agent at initial_bitrate, assumed fully delivered.
  std::vector<Observation> reset(const ScenarioSpec& scenario) {
    scenario_ = scenario;
    t_ = 0;
    const double x0 = sim_.initial_bitrate;
    return std::vector<Observation>(static_cast<std::size_t>(sim_.agents),
                                    Observation{x0, x0, 0, 0, 0, 0});
  }

  bool done() const noexcept { return t_ >= episode_len_; }

  Step step(std::span<const double> targets) {
    if (targets.size() != static_cast<std::size_t>(sim_.agents)) {
      throw DataError("target count " + std::to_string(targets.size()) +
                      " does not match agent count " + std::to_string(sim_.agents));
    }
    if (done()) throw DataError("episode already finished; call reset()");
    Step s;
    s.link = sample_link_state(scenario_, t_, episode_len_, sim_.users_at(t_), rng_);
    s.outcome = advance_link(s.link, targets, model_, rng_);
    s.observations = observations_from(s.outcome, targets);
    ++t_;
    return s;
  }

 private:
  SimConfig sim_;
  LinkModel model_;
  int episode_len_;
  RngStream rng_;
  ScenarioSpec scenario_;
  int t_ = 0;
};

}  // namespace asms
