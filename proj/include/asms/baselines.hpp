#pragma once

// Simplified rule-based rate controllers used as comparison points. They
// reuse the decision signals of delay-gradient and bandwidth-probing
// congestion control at a 1 s granularity; neither is a faithful
// implementation of a production algorithm.

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "asms/core.hpp"

namespace asms::baselines {

enum class Phase { steady, probe, drain };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::probe: return "probe";
    case Phase::drain: return "drain";
    default: return "steady";
  }
}

struct ControllerState {
  double smoothed_rtt = 0;  // ms
  double rtt_trend = 0;     // ms per step
  double bw_estimate = 0;   // Mbps
  Phase phase = Phase::steady;
  bool initialized = false;
  // bandwidth-probe bookkeeping
  std::deque<double> window;
  bool startup = false;
  int steps = 0;  // since the last probe
  double probe_latency = 0;
  double probe_estimate = 0;

  bool operator==(const ControllerState&) const = default;
};

struct DelayGradientParams {
  double smoothing = 0.3;
  double rise_threshold = 2.0;      // ms/step; above this the rate is cut
  double increase_threshold = 1.0;  // ms/step; below this (and fully delivered) the rate grows
  double delivery_ratio = 0.95;
  double p_threshold = 10.0;
};

struct Decision {
  ActionDelta action;
  ControllerState state;
};

inline std::size_t smallest_positive(const DeltaTable& t) { return t.zero_index() + 1; }

/// Cuts hard on rising smoothed latency or heavy loss, creeps up by the
/// smallest positive delta while latency is not rising and the stream is
/// fully delivered, holds otherwise.
inline Decision delay_gradient_controller(const ControllerState& state, const Observation& obs,
                                          const DeltaTable& table,
                                          const DelayGradientParams& prm = {}) {
  ControllerState next = state;
  if (!next.initialized) {
    next.smoothed_rtt = obs.latency_ms;
    next.rtt_trend = 0;
    next.initialized = true;
  } else {
    const double s = prm.smoothing * obs.latency_ms + (1.0 - prm.smoothing) * state.smoothed_rtt;
    next.rtt_trend = s - state.smoothed_rtt;
    next.smoothed_rtt = s;
  }
  next.bw_estimate = obs.received_mbps;
  std::size_t k = table.zero_index();
  if (next.rtt_trend > prm.rise_threshold || obs.lost_packets > prm.p_threshold) {
    k = table.most_negative();
  } else if (next.rtt_trend < prm.increase_threshold &&
             obs.received_mbps >= prm.delivery_ratio * obs.target_mbps) {
    k = smallest_positive(table);
  }
  return {{k, table[k]}, next};
}

struct BandwidthProbeParams {
  int window = 8;
  int probe_interval = 8;
  double target_fraction = 0.95;
  double drain_latency_rise = 0.10;
  double saturation_ratio = 0.9;  // y below this fraction of x means the link is the limit
};

/// Steers toward a fraction of the windowed-max delivery rate. Start-up
/// probes every step until the estimate stops growing, then drains once if
/// latency rose. Afterwards a probe follows every `probe_interval` steps,
/// deferred while the rate is still coming down toward the target.
inline Decision bandwidth_probe_controller(const ControllerState& state, const Observation& obs,
                                           const DeltaTable& table,
                                           const BandwidthProbeParams& prm = {}) {
  ControllerState next = state;
  if (!next.initialized) {
    next.initialized = true;
    next.startup = true;
    next.probe_latency = obs.latency_ms;
    next.probe_estimate = 0;
    next.smoothed_rtt = obs.latency_ms;
  }
  ++next.steps;
  next.rtt_trend = obs.latency_ms - next.smoothed_rtt;
  next.smoothed_rtt = obs.latency_ms;

  // A saturated link makes the current sample the best estimate.
  if (obs.received_mbps < prm.saturation_ratio * obs.target_mbps) next.window.clear();
  next.window.push_back(obs.received_mbps);
  while (static_cast<int>(next.window.size()) > prm.window) next.window.pop_front();
  next.bw_estimate = *std::max_element(next.window.begin(), next.window.end());

  auto emit = [&](Phase ph, std::size_t k) {
    next.phase = ph;
    return Decision{{k, table[k]}, next};
  };
  auto start_probe = [&] {
    if (!next.startup) next.probe_latency = obs.latency_ms;
    next.probe_estimate = next.bw_estimate;
    next.steps = 0;
    return emit(Phase::probe, table.most_positive());
  };
  const bool rose = obs.latency_ms > (1.0 + prm.drain_latency_rise) * next.probe_latency;

  if (next.startup) {
    if (!state.initialized || next.bw_estimate > state.probe_estimate) return start_probe();
    next.startup = false;
    if (rose) return emit(Phase::drain, table.most_negative());
  } else if (state.phase == Phase::probe) {
    if (rose) return emit(Phase::drain, table.most_negative());
    if (next.bw_estimate > state.probe_estimate) return start_probe();
  }

  const double target = prm.target_fraction * next.bw_estimate;
  const bool descending = obs.target_mbps > target + table[table.most_positive()];
  if (next.steps >= prm.probe_interval && !descending) return start_probe();

  std::size_t best = table.zero_index();
  double best_err = std::fabs(obs.target_mbps - target);
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double err = std::fabs(obs.target_mbps + table[k] - target);
    if (err < best_err - 1e-12 || (std::fabs(err - best_err) <= 1e-12 && k < best)) {
      best = k;
      best_err = err;
    }
  }
  return emit(Phase::steady, best);
}

}  // namespace asms::baselines
