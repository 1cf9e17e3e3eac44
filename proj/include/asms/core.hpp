#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asms/error.hpp"

namespace asms {

/// Local state seen by one agent at one step.
struct Observation {
  double target_mbps = 0;    // x: last selected target bitrate
  double received_mbps = 0;  // y: actually received bitrate
  double latency_ms = 0;     // l: average motion-to-photon latency
  double jitter_ms = 0;      // j: mean RTT variation
  double lost_packets = 0;   // p
  double nacks = 0;          // n

  bool operator==(const Observation&) const = default;

  bool valid() const noexcept {
    return target_mbps >= 0 && received_mbps >= 0 && latency_ms >= 0 && jitter_ms >= 0 &&
           lost_packets >= 0 && nacks >= 0 && received_mbps <= target_mbps &&
           nacks <= lost_packets;
  }
};

/// Ordered, symmetric table of bitrate changes (Mbps) forming the action space.
class DeltaTable {
 public:
  DeltaTable() : DeltaTable({-5.0, -1.0, 0.0, 1.0, 5.0}) {}

  explicit DeltaTable(std::vector<double> deltas) : deltas_(std::move(deltas)) {
    if (!is_valid(deltas_)) {
      throw DataError("delta table must be sorted, symmetric and contain exactly one zero");
    }
  }

  static bool is_valid(const std::vector<double>& d) {
    if (d.empty() || !std::is_sorted(d.begin(), d.end())) return false;
    if (std::count(d.begin(), d.end(), 0.0) != 1) return false;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] != -d[d.size() - 1 - i]) return false;
    }
    return std::adjacent_find(d.begin(), d.end()) == d.end();
  }

  std::size_t size() const noexcept { return deltas_.size(); }
  double operator[](std::size_t i) const { return deltas_.at(i); }
  const std::vector<double>& values() const noexcept { return deltas_; }

  std::size_t zero_index() const noexcept { return deltas_.size() / 2; }
  std::size_t most_negative() const noexcept { return 0; }
  std::size_t most_positive() const noexcept { return deltas_.size() - 1; }

  std::size_t index_of(double delta) const {
    auto it = std::find(deltas_.begin(), deltas_.end(), delta);
    if (it == deltas_.end()) throw DataError("delta not in table");
    return static_cast<std::size_t>(it - deltas_.begin());
  }

  bool operator==(const DeltaTable&) const = default;

 private:
  std::vector<double> deltas_;
};

struct ActionDelta {
  std::size_t index = 0;
  double delta = 0;
};

struct Range {
  double lo = 0;
  double hi = 0;

  double width() const noexcept { return hi - lo; }
  bool contains(double v, double tol = 0.0) const noexcept {
    return v >= lo - tol && v <= hi + tol;
  }
  bool operator==(const Range&) const = default;
};

/// A range that may drift linearly over an episode. Stationary profiles have
/// start == end.
struct Ramp {
  Range start;
  Range end;

  static Ramp fixed(double lo, double hi) { return {{lo, hi}, {lo, hi}}; }
  static Ramp constant(double v) { return {{v, v}, {v, v}}; }
  static Ramp ramp(double from, double to) { return {{from, from}, {to, to}}; }

  bool is_ramp() const noexcept { return !(start == end); }

  // Range at step t of an episode of length T (t = 0 gives start, t = T-1 gives end).
  Range at(int t, int episode_len) const noexcept {
    if (!is_ramp() || episode_len <= 1) return start;
    const double w = static_cast<double>(t) / static_cast<double>(episode_len - 1);
    return {start.lo + w * (end.lo - start.lo), start.hi + w * (end.hi - start.hi)};
  }

  bool valid() const noexcept {
    return start.lo <= start.hi && end.lo <= end.hi && start.lo >= 0 && end.lo >= 0;
  }

  bool operator==(const Ramp&) const = default;
};

/// One network condition profile. Loss values are fractions, not percent.
struct ScenarioSpec {
  std::string name;
  std::string description;
  Ramp bandwidth_mbps;
  Ramp latency_ms;
  Ramp jitter_ms;
  Ramp loss_rate;
  Ramp burst_loss;

  bool valid() const noexcept {
    return bandwidth_mbps.valid() && latency_ms.valid() && jitter_ms.valid() &&
           loss_rate.valid() && burst_loss.valid() && loss_rate.start.hi <= 1 &&
           loss_rate.end.hi <= 1 && burst_loss.start.hi <= 1 && burst_loss.end.hi <= 1;
  }
};

struct QoECoefficients {
  double alpha = 1.0;   // scene quality
  double beta = 0.4;    // choppiness
  double gamma = 0.2;   // latency
  double delta1 = 0.6;  // stability
  double delta2 = 0.5;  // disruption
  double y_min = 1.0;         // Mbps
  double f_target = 60.0;     // fps
  double u_max = 6.0;         // users
  double p_threshold = 10.0;  // packets per step
  double eps_small = 1e-6;

  bool operator==(const QoECoefficients&) const = default;

  bool valid() const noexcept {
    return alpha >= 0 && beta >= 0 && gamma >= 0 && delta1 >= 0 && delta2 >= 0 && y_min > 0 &&
           f_target >= 0 && u_max >= 1 && p_threshold >= 0 && eps_small > 0;
  }
};

enum class Activation { tanh, relu };

inline std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

enum class RewardMode { mean, sum };

/// Training hyperparameters. Defaults reproduce the published table; the
/// SAC-only rows are carried for completeness and never read.
struct HyperParams {
  double gamma_discount = 0.95;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int minibatch = 64;
  double lr = 0.0003;
  int epochs = 10;
  double grad_clip = 0.5;
  int policy_update_freq = 40;
  int fedavg_freq = 4;
  int hidden_width = 128;
  int episode_len = 40;
  int episodes = 330;
  double ldp_eps = 1.0;
  double ldp_clip = 0.1;
  bool ldp_enabled = true;
  double entropy_coef = 0.01;
  bool whiten_advantages = true;
  Activation actor_activation = Activation::tanh;
  Activation critic_activation = Activation::relu;
  std::string optimizer = "adam";
  // SAC baseline rows: parsed, unused.
  double entropy_temperature = 0.2;
  int replay_buffer_size = 5000;
  double target_update_coef = 0.005;
  int sac_critics = 2;

  bool operator==(const HyperParams&) const = default;
};

inline HyperParams default_hyperparams() { return HyperParams{}; }

/// Simulator and run settings that are not learning hyperparameters.
struct SimConfig {
  int agents = 6;
  double initial_bitrate = 10.0;  // Mbps, every agent's x at episode start
  double y_max = 200.0;           // Mbps
  double packet_size = 1200.0;    // bytes
  double latency_kappa = 1.0;
  double congestion_loss = 0.05;
  DeltaTable delta_table;
  std::vector<double> user_schedule;  // per-step user count; empty means u_t = agents
  RewardMode reward_mode = RewardMode::mean;
  std::vector<std::string> scenarios = {"S1", "S2", "S3", "S4", "S5", "S6"};
  int eval_episodes = 30;
  int checkpoint_every = 10;

  bool operator==(const SimConfig&) const = default;

  double users_at(int t) const {
    if (user_schedule.empty()) return static_cast<double>(agents);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), user_schedule.size() - 1);
    return user_schedule[i];
  }
};

/// Stationary profiles from the published network-conditions table. S5 and
/// S6 drift from their first to their second value over each episode.
inline std::vector<ScenarioSpec> builtin_scenarios() {
  return {
      {"S1", "high-performance cloud streaming", Ramp::fixed(100, 200), Ramp::fixed(10, 30),
       Ramp::fixed(2, 5), Ramp::constant(0.001), Ramp::constant(0.0)},
      {"S2", "home Wi-Fi 6 network", Ramp::fixed(50, 100), Ramp::fixed(30, 50),
       Ramp::fixed(5, 10), Ramp::constant(0.005), Ramp::constant(0.005)},
      {"S3", "4G LTE mobile network", Ramp::fixed(20, 80), Ramp::fixed(50, 100),
       Ramp::fixed(10, 20), Ramp::constant(0.01), Ramp::constant(0.01)},
      {"S4", "5G edge computing", Ramp::fixed(200, 500), Ramp::fixed(5, 10), Ramp::fixed(1, 3),
       Ramp::constant(0.001), Ramp::constant(0.0)},
      {"S5", "network congestion", Ramp::ramp(100, 30), Ramp::ramp(50, 100), Ramp::ramp(5, 20),
       Ramp::ramp(0.005, 0.05), Ramp::constant(0.10)},
      {"S6", "network recovery", Ramp::ramp(30, 100), Ramp::ramp(100, 20), Ramp::ramp(20, 5),
       Ramp::ramp(0.02, 0.005), Ramp::ramp(0.05, 0.0)},
  };
}

/// Calibration profiles outside the published table.
inline std::vector<ScenarioSpec> calibration_scenarios() {
  return {
      // Stationary 50 Mbps lossless link for single-agent sanity runs.
      {"C50", "stationary 50 Mbps lossless link", Ramp::constant(50), Ramp::constant(20),
       Ramp::constant(2), Ramp::constant(0.0), Ramp::constant(0.0)},
  };
}

inline std::optional<ScenarioSpec> find_scenario(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto& list : {builtin_scenarios(), calibration_scenarios()}) {
    for (const auto& s : list) {
      if (s.name == upper) return s;
    }
  }
  return std::nullopt;
}

inline ScenarioSpec require_scenario(std::string_view name) {
  auto s = find_scenario(name);
  if (!s) throw UsageError("unknown scenario '" + std::string(name) + "'");
  return *s;
}

}  // namespace asms
