#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "asms/oracles.hpp"
#include "asms/rl.hpp"

using namespace asms;

namespace {

nn::ModelParams policy_net(std::uint64_t seed, int hidden = 16, int actions = 5) {
  RngStream rng(seed, StreamKind::misc);
  return nn::init_mlp(rl::kObsDim, hidden, actions, Activation::tanh, nn::Head::categorical_logits, rng);
}

nn::ModelParams value_net(std::uint64_t seed, int hidden = 16) {
  RngStream rng(seed, StreamKind::misc, 1);
  return nn::init_mlp(rl::kObsDim, hidden, 1, Activation::relu, nn::Head::scalar, rng);
}

// Zeroes the last layer so the logits are all equal, then optionally
// lifts one action's bias.
nn::ModelParams flat_policy(std::size_t boosted = 99, double boost = 0) {
  auto p = policy_net(1);
  auto v = p.mutable_values();
  const auto& last = p.shapes().back();
  const std::size_t off = p.size() - last.param_count();
  for (std::size_t k = off; k < p.size(); ++k) v[k] = 0;
  if (boosted < static_cast<std::size_t>(last.out)) v[p.size() - last.out + boosted] = boost;
  return p;
}

rl::Trajectory random_traj(std::size_t T, RngStream& rng) {
  rl::Trajectory t;
  for (std::size_t i = 0; i < T; ++i) {
    t.obs.push_back({});
    t.actions.push_back(0);
    t.log_probs.push_back(-1);
    t.rewards.push_back(rng.normal(0, 2));
    t.values.push_back(rng.normal(0, 3));
  }
  t.bootstrap_value = rng.normal(0, 3);
  t.complete = true;
  return t;
}

rl::Trajectory rewards_only(std::vector<double> r, double bootstrap = 0) {
  rl::Trajectory t;
  for (double x : r) {
    t.obs.push_back({});
    t.actions.push_back(0);
    t.log_probs.push_back(-1);
    t.rewards.push_back(x);
    t.values.push_back(0);
  }
  t.bootstrap_value = bootstrap;
  t.complete = true;
  return t;
}

std::vector<rl::Sample> random_samples(std::size_t n, const nn::ModelParams& pi, RngStream& rng) {
  std::vector<rl::Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    rl::Sample s;
    for (auto& v : s.obs) v = rng.uniform(0, 1.5);
    s.action = rng.below(5);
    s.old_log_prob = nn::categorical_head(nn::forward(pi, s.obs).first).log_probs[s.action];
    s.advantage = rng.normal();
    s.ret = rng.normal(0, 2);
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Normalize, OriginAndAnchor) {
  for (double v : rl::normalize_obs(Observation{}, 200)) EXPECT_EQ(v, 0.0);
  const auto v = rl::normalize_obs(Observation{200, 100, 100, 25, 50, 50}, 200);
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.5);
  EXPECT_EQ(v[2], 0.5);
  EXPECT_EQ(v[3], 0.5);
  EXPECT_EQ(v[4], 0.5);
  EXPECT_EQ(v[5], 0.5);
  EXPECT_EQ(rl::normalize_obs(Observation{0, 0, 1e6, 0, 0, 0}, 200)[2], rl::ObsScale::clip_max);
}

TEST(SelectAction, UniformLogitsPassChiSquare) {
  const auto p = flat_policy();
  RngStream rng(3, StreamKind::agent);
  const rl::ObsVec x{0.1, 0.1, 0.2, 0.1, 0, 0};
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto a = rl::select_action(p, x, rng);
    ASSERT_NEAR(a.log_prob, std::log(0.2), 1e-12);
    ++counts[a.index];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
  EXPECT_LT(chi2, 13.28);  // 4 dof, p = 0.01
}

TEST(SelectAction, DominantLogit) {
  const auto p = flat_policy(3, 20.0);
  RngStream rng(4, StreamKind::agent);
  const rl::ObsVec x{};
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += rl::select_action(p, x, rng).index == 3;
  EXPECT_GE(hits, 9990);
  EXPECT_EQ(rl::greedy_action(p, x), 3u);
}

TEST(SelectAction, SeededSequence) {
  const auto p = policy_net(5);
  RngStream a(9, StreamKind::agent, 2), b(9, StreamKind::agent, 2);
  const rl::ObsVec x{0.3, 0.2, 0.1, 0.4, 0.0, 0.1};
  for (int i = 0; i < 500; ++i) ASSERT_EQ(rl::select_action(p, x, a).index, rl::select_action(p, x, b).index);
}

TEST(Gae, SingleStep) {
  const auto t = rewards_only({1.0});
  EXPECT_EQ(rl::compute_gae(t, 0.95, 0.95), (std::vector<double>{1.0}));
}

TEST(Gae, LambdaZeroIsTdError) {
  RngStream rng(6, StreamKind::misc);
  const auto t = random_traj(40, rng);
  const auto adv = rl::compute_gae(t, 0.9, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double next = i + 1 < t.size() ? t.values[i + 1] : t.bootstrap_value;
    ASSERT_NEAR(adv[i], t.rewards[i] + 0.9 * next - t.values[i], 1e-12);
  }
}

TEST(Gae, RecursionMatchesDirectSum) {
  RngStream rng(7, StreamKind::misc);
  for (std::size_t T = 1; T <= 64; ++T) {
    const auto t = random_traj(T, rng);
    const double g = rng.uniform(0.5, 1.0), l = rng.uniform(0.0, 1.0);
    const auto got = rl::compute_gae(t, g, l);
    const auto ref = oracle::gae(t, g, l);
    for (std::size_t i = 0; i < T; ++i) ASSERT_NEAR(got[i], ref[i], 1e-10) << "T=" << T;
  }
  const auto t = random_traj(40, rng);
  const auto got = rl::compute_gae(t, 0.95, 0.95);
  const auto ref = oracle::gae(t, 0.95, 0.95);
  for (std::size_t i = 0; i < 40; ++i) ASSERT_NEAR(got[i], ref[i], 1e-10);
}

TEST(Gae, IncompleteTrajectoryRejected) {
  auto t = rewards_only({1, 2});
  t.complete = false;
  EXPECT_THROW(rl::compute_gae(t, 0.9, 0.9), DataError);
  EXPECT_THROW(rl::compute_returns(t, 0.9), DataError);
}

TEST(Returns, Examples) {
  for (double g : rl::compute_returns(rewards_only({0, 0, 0}), 0.95)) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(rl::compute_returns(rewards_only({1, 1, 1}), 1.0)[0], 3.0);
  EXPECT_NEAR(rl::compute_returns(rewards_only({1, 1}, 10), 0.5)[0], 1 + 0.5 + 0.25 * 10, 1e-15);
}

TEST(Returns, MatchDirectSum) {
  RngStream rng(8, StreamKind::misc);
  for (std::size_t T = 1; T <= 64; ++T) {
    const auto t = random_traj(T, rng);
    const auto got = rl::compute_returns(t, 0.95);
    const auto ref = oracle::returns(t, 0.95);
    for (std::size_t i = 0; i < T; ++i) ASSERT_NEAR(got[i], ref[i], 1e-10);
  }
}

TEST(Clip, Examples) {
  EXPECT_DOUBLE_EQ(rl::clipped_objective(-0.7, -0.7, 1.3, 0.2), 1.3);
  EXPECT_NEAR(rl::clipped_objective(std::log(1.5), 0.0, 2.0, 0.2), 2.4, 1e-12);
  EXPECT_NEAR(rl::clipped_objective(std::log(0.5), 0.0, -1.0, 0.2), -0.8, 1e-12);
}

TEST(Clip, MatchesCaseOracle) {
  RngStream rng(9, StreamKind::misc);
  for (int i = 0; i < 10000; ++i) {
    const double r = rng.uniform(0.3, 2.0), a = rng.normal(0, 2), eps = rng.uniform(0.05, 0.5);
    ASSERT_NEAR(rl::clipped_objective(std::log(r), 0.0, a, eps), oracle::clipped_objective(r, a, eps), 1e-12);
  }
}

TEST(Whiten, MeanZeroStdOne) {
  RngStream rng(10, StreamKind::misc);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<rl::Sample> s(2 + rng.below(300));
    for (auto& x : s) x.advantage = rng.normal(rng.uniform(-10, 10), rng.uniform(0.1, 20));
    rl::whiten(s);
    double m = 0, v = 0;
    for (const auto& x : s) m += x.advantage / static_cast<double>(s.size());
    for (const auto& x : s) v += (x.advantage - m) * (x.advantage - m) / static_cast<double>(s.size());
    ASSERT_NEAR(m, 0, 1e-9);
    ASSERT_NEAR(std::sqrt(v), 1, 1e-6);
  }
  std::vector<rl::Sample> one(1);
  one[0].advantage = 3.0;
  rl::whiten(one);
  EXPECT_EQ(one[0].advantage, 3.0);
}

TEST(Batch, SizeIsSegmentsTimesLength) {
  RngStream rng(11, StreamKind::misc);
  std::vector<rl::Trajectory> ts;
  for (int i = 0; i < 3; ++i) ts.push_back(random_traj(40, rng));
  const auto b = rl::build_batch(ts, 0.95, 0.95, true);
  EXPECT_EQ(b.size(), 120u);
}

TEST(PolicyGradient, ClippedSamplesCarryNoGradient) {
  const auto pi = policy_net(12);
  RngStream rng(12, StreamKind::misc);
  auto samples = random_samples(1, pi, rng);
  // Ratio 1.5 with positive advantage sits on the clipped branch.
  samples[0].advantage = 1.0;
  samples[0].old_log_prob -= std::log(1.5);
  std::vector<double> g(pi.size(), 0.0);
  rl::policy_loss(pi, samples, 0.2, 0.0, g);
  for (double e : g) ASSERT_EQ(e, 0.0);
  // Inside the band the same sample does carry gradient.
  samples[0].old_log_prob += std::log(1.5) - std::log(1.1);
  rl::policy_loss(pi, samples, 0.2, 0.0, g);
  double norm = 0;
  for (double e : g) norm += e * e;
  EXPECT_GT(norm, 0);
}

TEST(PolicyGradient, MatchesFiniteDifferences) {
  RngStream rng(13, StreamKind::misc);
  for (int k = 0; k < 20; ++k) {
    auto pi = policy_net(100 + k, 8 + static_cast<int>(rng.below(16)));
    const auto samples = random_samples(8, pi, rng);
    std::vector<double> g(pi.size(), 0.0);
    rl::policy_loss(pi, samples, 0.2, 0.01, g);
    auto loss = [&](const nn::ModelParams& p) { return rl::policy_loss(p, samples, 0.2, 0.01).loss; };
    ASSERT_LT(nn::grad_check(pi, loss, g, rng).max_rel_error, 1e-4) << "net " << k;
  }
}

TEST(PpoUpdate, FirstMinibatchRatiosAreOne) {
  rl::Learner l(policy_net(14), value_net(14));
  RngStream rng(14, StreamKind::misc);
  rl::TrainBatch b;
  b.samples = random_samples(200, l.policy, rng);
  const auto d = rl::ppo_update(l, b, rl::PPOSettings{}, rng);
  EXPECT_LE(d.first_minibatch_max_ratio_dev, 1e-8);
  EXPECT_FALSE(d.aborted);
  EXPECT_EQ(d.value_loss_per_epoch.size(), 10u);
  EXPECT_EQ(d.minibatches, 40);  // 4 minibatches of <= 64 per epoch
}

TEST(PpoUpdate, ValueLossDecreases) {
  rl::Learner l(policy_net(15), value_net(15));
  RngStream rng(15, StreamKind::misc);
  rl::TrainBatch b;
  b.samples = random_samples(256, l.policy, rng);
  auto cfg = rl::PPOSettings{};
  cfg.lr = 1e-3;
  const auto d = rl::ppo_update(l, b, cfg, rng);
  const auto& v = d.value_loss_per_epoch;
  for (std::size_t e = 1; e < v.size(); ++e) EXPECT_LT(v[e], v[e - 1]) << "epoch " << e;
}

TEST(PpoUpdate, PositiveAdvantageRaisesTakenAction) {
  rl::Learner l(policy_net(16), value_net(16));
  rl::Sample s;
  s.obs = {0.2, 0.2, 0.3, 0.1, 0.0, 0.0};
  s.action = 2;
  const auto before = nn::categorical_head(nn::forward(l.policy, s.obs).first).log_probs[2];
  s.old_log_prob = before;
  s.advantage = 1.0;
  rl::TrainBatch b;
  b.samples = {s};
  auto cfg = rl::PPOSettings{};
  cfg.epochs = 1;
  cfg.entropy_coef = 0;
  RngStream rng(16, StreamKind::misc);
  rl::ppo_update(l, b, cfg, rng);
  const auto after = nn::categorical_head(nn::forward(l.policy, s.obs).first).log_probs[2];
  EXPECT_GT(after, before);
}

TEST(PpoUpdate, EmptyBatchAndNonFiniteLoss) {
  rl::Learner l(policy_net(17), value_net(17));
  RngStream rng(17, StreamKind::misc);
  EXPECT_THROW(rl::ppo_update(l, rl::TrainBatch{}, rl::PPOSettings{}, rng), DataError);
  rl::TrainBatch b;
  b.samples = random_samples(10, l.policy, rng);
  b.samples[3].ret = std::nan("");
  const auto snapshot = l.policy;
  const auto d = rl::ppo_update(l, b, rl::PPOSettings{}, rng);
  EXPECT_TRUE(d.aborted);
  EXPECT_TRUE(l.policy == snapshot);
}
