#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "asms/nn.hpp"
#include "asms/oracles.hpp"

using namespace asms;
using nn::Head;
using nn::ModelParams;

namespace {

ModelParams net(int in, int hidden, int out, Activation act, Head head, std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc);
  return nn::init_mlp(in, hidden, out, act, head, rng);
}

}  // namespace

TEST(Init, ActorAndCriticSizes) {
  const auto pi = net(6, 128, 5, Activation::tanh, Head::categorical_logits, 1);
  EXPECT_EQ(pi.size(), 6u * 128 + 128 + 128 * 128 + 128 + 128 * 5 + 5);
  EXPECT_EQ(pi.size(), 18053u);
  const auto v = net(6, 128, 1, Activation::relu, Head::scalar, 1);
  EXPECT_EQ(v.size(), 17537u);
}

TEST(Init, DeterministicAndBounded) {
  const auto a = net(6, 32, 5, Activation::tanh, Head::categorical_logits, 3);
  const auto b = net(6, 32, 5, Activation::tanh, Head::categorical_logits, 3);
  const auto c = net(6, 32, 5, Activation::tanh, Head::categorical_logits, 4);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  const double limit = std::sqrt(6.0 / (6 + 32));
  for (int j = 0; j < 6 * 32; ++j) ASSERT_LE(std::fabs(a.values()[static_cast<std::size_t>(j)]), limit);
  for (int j = 0; j < 32; ++j) ASSERT_EQ(a.values()[static_cast<std::size_t>(6 * 32 + j)], 0.0);
}

TEST(Shapes, RejectsBrokenChains) {
  EXPECT_THROW(ModelParams({{2, 3}, {4, 1}}, Activation::tanh, Head::scalar), std::invalid_argument);
  EXPECT_THROW(ModelParams({}, Activation::tanh, Head::scalar), std::invalid_argument);
  EXPECT_THROW(ModelParams({{0, 3}}, Activation::tanh, Head::scalar), std::invalid_argument);
}

TEST(Forward, ZeroNetworkOutputsZero) {
  const ModelParams p({{6, 4}, {4, 4}, {4, 1}}, Activation::tanh, Head::scalar);
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(nn::forward(p, x).first, (std::vector<double>{0.0}));
}

TEST(Forward, ReluGating) {
  ModelParams p({{1, 1}, {1, 1}}, Activation::relu, Head::scalar);
  auto v = p.mutable_values();
  v[0] = 1;  // w1
  v[1] = 0;  // b1
  v[2] = 1;  // w2
  v[3] = 0;  // b2
  const std::vector<double> neg{-3}, pos{3};
  EXPECT_EQ(nn::forward(p, neg).first[0], 0.0);
  EXPECT_EQ(nn::forward(p, pos).first[0], 3.0);
}

TEST(Forward, MatchesStraightLineOracle) {
  RngStream rng(8, StreamKind::misc);
  for (auto act : {Activation::tanh, Activation::relu}) {
    auto p = net(6, 17, 5, act, Head::categorical_logits, 8);
    for (auto& x : p.mutable_values()) x += rng.uniform(-0.1, 0.1);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(6);
      for (auto& e : x) e = rng.uniform(-2, 2);
      const auto got = nn::forward(p, x).first;
      const auto ref = oracle::forward(p, x);
      for (std::size_t k = 0; k < got.size(); ++k) ASSERT_NEAR(got[k], ref[k], 1e-12);
    }
  }
}

TEST(Forward, PureAndRejectsWrongInput) {
  const auto p = net(6, 8, 3, Activation::tanh, Head::categorical_logits, 2);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(nn::forward(p, x).first, nn::forward(p, x).first);
  const std::vector<double> bad{1, 2};
  EXPECT_ANY_THROW(nn::forward(p, bad));
}

TEST(Backward, ZeroOutputGradientGivesZero) {
  const auto p = net(6, 8, 3, Activation::tanh, Head::categorical_logits, 2);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto [out, cache] = nn::forward(p, x);
  const std::vector<double> g(3, 0.0);
  for (double e : nn::backward(p, cache, g)) ASSERT_EQ(e, 0.0);
}

TEST(Backward, StaleCacheRejected) {
  auto p = net(6, 8, 3, Activation::tanh, Head::categorical_logits, 2);
  const std::vector<double> x(6, 0.5);
  const auto [out, cache] = nn::forward(p, x);
  p.mutable_values()[0] += 1;
  const std::vector<double> g(3, 1.0);
  EXPECT_ANY_THROW(nn::backward(p, cache, g));
}

TEST(GradCheck, LinearRegressionIsExact) {
  ModelParams p({{3, 1}}, Activation::tanh, Head::scalar);
  RngStream rng(10, StreamKind::misc);
  for (auto& v : p.mutable_values()) v = rng.normal();
  std::vector<std::vector<double>> xs(16, std::vector<double>(3));
  std::vector<double> ys(16);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (auto& e : xs[i]) e = rng.normal();
    ys[i] = rng.normal();
  }
  auto loss = [&](const ModelParams& q) {
    double s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = nn::forward(q, xs[i]).first[0] - ys[i];
      s += e * e / 2;
    }
    return s;
  };
  std::vector<double> grad(p.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto [out, cache] = nn::forward(p, xs[i]);
    const std::vector<double> g{out[0] - ys[i]};
    nn::backward_accumulate(p, cache, g, grad);
  }
  const auto r = nn::grad_check(p, loss, grad, rng);
  EXPECT_EQ(r.coords_checked, p.size());
  EXPECT_LT(r.max_rel_error, 1e-7);
}

TEST(GradCheck, ScaledGradientIsCaught) {
  auto p = net(4, 6, 2, Activation::tanh, Head::scalar, 11);
  const std::vector<double> x{0.3, -0.2, 0.5, 1.0};
  auto loss = [&](const ModelParams& q) {
    const auto o = nn::forward(q, x).first;
    return o[0] * o[0] + 3 * o[1];
  };
  const auto [out, cache] = nn::forward(p, x);
  const std::vector<double> g{2 * out[0], 3.0};
  auto grad = nn::backward(p, cache, g);
  RngStream rng(11, StreamKind::misc);
  EXPECT_LT(nn::grad_check(p, loss, grad, rng).max_rel_error, 1e-6);
  for (auto& e : grad) e *= 1.01;
  EXPECT_GT(nn::grad_check(p, loss, grad, rng).max_rel_error, 1e-4);
}

TEST(GradCheck, FaultHookBreaksLayerOne) {
  auto p = net(4, 6, 1, Activation::tanh, Head::scalar, 12);
  const std::vector<double> x{0.3, -0.2, 0.5, 1.0};
  auto loss = [&](const ModelParams& q) { return nn::forward(q, x).first[0]; };
  nn::testing::layer1_grad_scale() = 1.01;
  const auto [out, cache] = nn::forward(p, x);
  const std::vector<double> g{1.0};
  const auto grad = nn::backward(p, cache, g);
  nn::testing::layer1_grad_scale() = 1.0;
  RngStream rng(12, StreamKind::misc);
  EXPECT_GT(nn::grad_check(p, loss, grad, rng).max_rel_error, 1e-4);
}

TEST(Categorical, UniformLogits) {
  const std::vector<double> z(5, 0.7);
  const auto d = nn::categorical_head(z);
  for (double p : d.probs) EXPECT_NEAR(p, 0.2, 1e-15);
  EXPECT_NEAR(d.entropy, std::log(5.0), 1e-12);
}

TEST(Categorical, ExtremeLogitsStayFinite) {
  const std::vector<double> z{1000, 0};
  const auto d = nn::categorical_head(z);
  EXPECT_NEAR(d.probs[0], 1.0, 1e-15);
  EXPECT_NEAR(d.probs[1], 0.0, 1e-15);
  EXPECT_TRUE(std::isfinite(d.log_probs[1]));
  EXPECT_TRUE(std::isfinite(d.entropy));
  EXPECT_LE(d.log_probs[0], 0.0);
}

TEST(Categorical, ShiftInvariance) {
  RngStream rng(13, StreamKind::misc);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> z(5), shifted(5);
    const double c = rng.uniform(-50, 50);
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = rng.normal(0, 3);
      shifted[k] = z[k] + c;
    }
    const auto a = nn::categorical_head(z), b = nn::categorical_head(shifted);
    for (std::size_t k = 0; k < z.size(); ++k) ASSERT_NEAR(a.probs[k], b.probs[k], 1e-12);
  }
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  auto p = net(3, 4, 2, Activation::tanh, Head::scalar, 14);
  const auto before = p;
  nn::AdamState st(p.size());
  const std::vector<double> g(p.size(), 0.0);
  nn::adam_step(p, st, g, 0.01, 0.5);
  EXPECT_TRUE(p == before);
}

TEST(Adam, FirstStepIsSignTimesLr) {
  ModelParams p({{1, 3}}, Activation::tanh, Head::scalar);
  nn::AdamState st(p.size());
  const std::vector<double> g{1e-3, -2e-3, 5e-4, 0, -1e-4, 3e-3};
  const auto before = std::vector<double>(p.values().begin(), p.values().end());
  const auto rep = nn::adam_step(p, st, g, 0.01, 0.5);
  EXPECT_TRUE(rep.applied);
  EXPECT_FALSE(rep.clipped);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double expect = g[k] > 0 ? -0.01 : (g[k] < 0 ? 0.01 : 0.0);
    EXPECT_NEAR(p.values()[k] - before[k], expect, 1e-5) << k;
  }
}

TEST(Adam, MinimisesSquare) {
  ModelParams p({{1, 1}}, Activation::tanh, Head::scalar);
  p.mutable_values()[0] = 1.0;
  nn::AdamState st(p.size());
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> g{2 * p.values()[0], 0.0};
    nn::adam_step(p, st, g, 0.1, 0);
  }
  EXPECT_LT(std::fabs(p.values()[0]), 1e-2);
}

TEST(Adam, GlobalNormClip) {
  ModelParams p({{1, 1}}, Activation::tanh, Head::scalar);
  nn::AdamState st(p.size());
  const std::vector<double> g{3.0, 4.0};
  const auto rep = nn::adam_step(p, st, g, 0.1, 0.5);
  EXPECT_TRUE(rep.clipped);
  EXPECT_DOUBLE_EQ(rep.grad_norm, 5.0);
  EXPECT_NEAR(st.m[0], 0.1 * 3.0 * 0.1, 1e-15);
}

TEST(Adam, NonFiniteGradientSkipped) {
  auto p = net(3, 4, 2, Activation::tanh, Head::scalar, 15);
  const auto before = p;
  nn::AdamState st(p.size());
  std::vector<double> g(p.size(), 0.1);
  g[3] = std::nan("");
  const auto rep = nn::adam_step(p, st, g, 0.01, 0.5);
  EXPECT_FALSE(rep.applied);
  EXPECT_TRUE(p == before);
  EXPECT_EQ(st.step, 0u);
}
