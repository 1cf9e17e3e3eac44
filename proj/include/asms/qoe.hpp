#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>

#include "asms/core.hpp"
#include "asms/error.hpp"

namespace asms {

namespace qoe_detail {
inline std::atomic<std::uint64_t> clamp_count{0};
}

/// Number of times quality() saw y < y_min and clamped it.
inline std::uint64_t quality_clamp_count() noexcept { return qoe_detail::clamp_count.load(); }

/// ln(y / y_min); bitrates below y_min score 0.
inline double quality(double y, double y_min) noexcept {
  if (y < y_min) {
    qoe_detail::clamp_count.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  return std::log(y / y_min);
}

inline double disruption_penalty(double lost_packets, double p_threshold) noexcept {
  return std::max(0.0, lost_packets - p_threshold);
}

/// Unweighted QoE components. compute_qoe is their weighted sum, which keeps
/// coefficient fitting linear.
struct QoETerms {
  double scene = 0;       // q(y_t) * exp(-u_t / u_max)
  double choppiness = 0;  // |f_t - f_target|
  double latency = 0;     // l_t / (y_t + eps)
  double stability = 0;   // |q(y_next) - q(y_t)|
  double disruption = 0;  // max(0, p_t - p_threshold)

  double weighted(const QoECoefficients& c) const noexcept {
    return c.alpha * scene - c.beta * choppiness - c.gamma * latency - c.delta1 * stability -
           c.delta2 * disruption;
  }
};

inline QoETerms qoe_terms(const Observation& obs, double frame_rate, double y_next, double users,
                          const QoECoefficients& c) noexcept {
  const double q_now = quality(obs.received_mbps, c.y_min);
  QoETerms t;
  t.scene = q_now * std::exp(-users / c.u_max);
  t.choppiness = std::fabs(frame_rate - c.f_target);
  t.latency = obs.latency_ms / (obs.received_mbps + c.eps_small);
  t.stability = std::fabs(quality(y_next, c.y_min) - q_now);
  t.disruption = disruption_penalty(obs.lost_packets, c.p_threshold);
  return t;
}

/// Time-step QoE. The choppiness term measures the delivered frame rate
/// against f_target.
inline double compute_qoe(const Observation& obs, double frame_rate, double y_next, double users,
                          const QoECoefficients& c) noexcept {
  return qoe_terms(obs, frame_rate, y_next, users, c).weighted(c);
}

inline double global_reward(std::span<const double> qoes, RewardMode mode = RewardMode::mean) {
  if (qoes.empty()) throw DataError("global_reward needs at least one QoE value");
  double sum = 0;
  for (double q : qoes) sum += q;
  return mode == RewardMode::mean ? sum / static_cast<double>(qoes.size()) : sum;
}

}  // namespace asms
