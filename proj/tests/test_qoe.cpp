#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "asms/qoe.hpp"
#include "asms/rng.hpp"

using namespace asms;

namespace {

Observation obs(double y, double l, double p) { return {y, y, l, 0, p, p}; }

}  // namespace

TEST(Quality, LogOfRatio) {
  EXPECT_EQ(quality(1.0, 1.0), 0.0);
  EXPECT_NEAR(quality(std::exp(1.0) * 2.0, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(quality(50, 1), 3.9120, 1e-4);
}

TEST(Quality, BelowFloorClampsAndCounts) {
  const auto before = quality_clamp_count();
  EXPECT_EQ(quality(0.5, 1.0), 0.0);
  EXPECT_EQ(quality_clamp_count(), before + 1);
}

TEST(Disruption, ExcessOverThreshold) {
  EXPECT_EQ(disruption_penalty(10, 10), 0);
  EXPECT_EQ(disruption_penalty(14, 10), 4);
  EXPECT_EQ(disruption_penalty(0, 10), 0);
}

TEST(Qoe, AllTermsVanish) {
  const QoECoefficients c;
  EXPECT_EQ(compute_qoe(obs(c.y_min, 0, c.p_threshold), c.f_target, c.y_min, 0, c), 0.0);
}

TEST(Qoe, OnlyDisruptionActive) {
  QoECoefficients c;
  c.delta2 = 0.5;
  EXPECT_DOUBLE_EQ(compute_qoe(obs(c.y_min, 0, c.p_threshold + 4), c.f_target, c.y_min, 0, c), -2.0);
}

TEST(Qoe, ReferenceWeightsOnFixedInput) {
  QoECoefficients c;
  c.alpha = 1;
  c.beta = 0.4;
  c.gamma = 0.2;
  c.delta1 = 0.6;
  c.delta2 = 0.5;
  // Independent evaluation of the same expression outside this codebase.
  EXPECT_NEAR(compute_qoe(obs(20, 40, 13), 54, 25, 3, c), -2.6168826385873976, 1e-12);
}

TEST(Qoe, DefaultWeights) {
  const QoECoefficients c;
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.beta, 0.4);
  EXPECT_EQ(c.gamma, 0.2);
  EXPECT_EQ(c.delta1, 0.6);
  EXPECT_EQ(c.delta2, 0.5);
}

TEST(Qoe, TermsCombineLinearly) {
  RngStream rng(4, StreamKind::misc);
  const QoECoefficients c;
  for (int i = 0; i < 200; ++i) {
    const auto o = obs(rng.uniform(0.5, 200), rng.uniform(0, 300), rng.uniform(0, 40));
    const double f = rng.uniform(0, 60), yn = rng.uniform(0.5, 200), u = rng.uniform(0, 6);
    const auto t = qoe_terms(o, f, yn, u, c);
    const double by_hand = c.alpha * t.scene - c.beta * t.choppiness - c.gamma * t.latency -
                           c.delta1 * t.stability - c.delta2 * t.disruption;
    ASSERT_DOUBLE_EQ(compute_qoe(o, f, yn, u, c), by_hand);
  }
}

TEST(Qoe, MonotoneInEachInput) {
  RngStream rng(5, StreamKind::misc);
  const QoECoefficients c;
  for (int i = 0; i < 300; ++i) {
    const double y = rng.uniform(1, 150), l = rng.uniform(0, 200), p = rng.uniform(0, 40);
    const double f = rng.uniform(0, 60), u = rng.uniform(0, 6);
    const double base = compute_qoe(obs(y, l, p), f, y, u, c);
    const double d = rng.uniform(0.01, 20);
    // Scene term alone grows with y.
    ASSERT_GE(qoe_terms(obs(y + d, l, p), f, y + d, u, c).scene, qoe_terms(obs(y, l, p), f, y, u, c).scene);
    ASSERT_LE(compute_qoe(obs(y, l + d, p), f, y, u, c), base);
    ASSERT_LE(compute_qoe(obs(y, l, p + d), f, y, u, c), base);
    ASSERT_LE(compute_qoe(obs(y, l, p), f, y, u + d / 10, c), base);
    ASSERT_LE(compute_qoe(obs(y, l, p), std::max(0.0, f - d), y, u, c), base);
  }
}

TEST(Qoe, StabilityIsSymmetric) {
  RngStream rng(6, StreamKind::misc);
  const QoECoefficients c;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.5, 200), b = rng.uniform(0.5, 200);
    ASSERT_DOUBLE_EQ(qoe_terms(obs(a, 0, 0), 60, b, 1, c).stability,
                     qoe_terms(obs(b, 0, 0), 60, a, 1, c).stability);
  }
}

TEST(GlobalReward, MeanAndSum) {
  const std::vector<double> one{0.5}, three{1, 2, 3};
  EXPECT_EQ(global_reward(one), 0.5);
  EXPECT_EQ(global_reward(three), 2.0);
  EXPECT_EQ(global_reward(three, RewardMode::sum), 6.0);
  EXPECT_THROW(global_reward(std::vector<double>{}), DataError);
}

TEST(GlobalReward, PermutationAndReplication) {
  RngStream rng(7, StreamKind::misc);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> q(1 + rng.below(8));
    for (auto& v : q) v = rng.normal(0, 5);
    auto shuffled = q;
    std::reverse(shuffled.begin(), shuffled.end());
    ASSERT_NEAR(global_reward(q), global_reward(shuffled), 1e-12);
    const double v = rng.normal(0, 5);
    ASSERT_NEAR(global_reward(std::vector<double>(1 + rng.below(10), v)), v, 1e-12);
  }
}
