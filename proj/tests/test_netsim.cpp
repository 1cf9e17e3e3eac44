#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "asms/netsim.hpp"
#include "asms/oracles.hpp"

using namespace asms;

namespace {

LinkState clean_link(double capacity) {
  LinkState s;
  s.capacity = capacity;
  s.base_latency = 20;
  s.jitter_range = {1, 2};
  s.users = 1;
  return s;
}

std::vector<double> alloc(std::vector<double> x, double cap) { return allocate_max_min(x, cap); }

}  // namespace

TEST(MaxMin, UnderCapacityPassesThrough) {
  EXPECT_EQ(alloc({10, 20, 30}, 100), (std::vector<double>{10, 20, 30}));
}

TEST(MaxMin, SymmetricSplit) { EXPECT_EQ(alloc({50, 50}, 60), (std::vector<double>{30, 30})); }

TEST(MaxMin, SmallDemandSatisfiedFirst) {
  const auto y = alloc({10, 50, 50}, 90);
  ASSERT_EQ(y.size(), 3u);
  EXPECT_NEAR(y[0], 10, 1e-12);
  EXPECT_NEAR(y[1], 40, 1e-12);
  EXPECT_NEAR(y[2], 40, 1e-12);
}

TEST(MaxMin, EmptyAndZeroCapacity) {
  EXPECT_TRUE(alloc({}, 10).empty());
  EXPECT_EQ(alloc({5, 7}, 0), (std::vector<double>{0, 0}));
}

TEST(MaxMin, MatchesWaterFillingOracle) {
  RngStream rng(21, StreamKind::misc);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(1 + rng.below(8));
    for (auto& v : x) v = rng.uniform(0, 200);
    const double cap = rng.uniform(0, 600);
    const auto y = allocate_max_min(x, cap);
    const auto ref = oracle::water_fill(x, cap);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-9) << "trial " << trial;
  }
}

TEST(MaxMin, ConservationAndMonotonicity) {
  RngStream rng(22, StreamKind::misc);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(1 + rng.below(6));
    for (auto& v : x) v = rng.uniform(1, 200);
    const double cap = rng.uniform(10, 500);
    const auto y = allocate_max_min(x, cap);
    const double total = std::accumulate(y.begin(), y.end(), 0.0);
    ASSERT_LE(total, cap + 1e-9);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_LE(y[i], x[i]);
    const std::size_t k = rng.below(x.size());
    auto raised = x;
    raised[k] += rng.uniform(0, 50);
    ASSERT_GE(allocate_max_min(raised, cap)[k], y[k] - 1e-12);
  }
}

TEST(LinkStateSampling, StationaryRange) {
  RngStream rng(1, StreamKind::environment);
  const auto s1 = require_scenario("S1");
  for (int t = 0; t < 40; ++t) {
    const auto st = sample_link_state(s1, t, 40, 6, rng);
    ASSERT_GE(st.capacity, 100);
    ASSERT_LE(st.capacity, 200);
    ASSERT_GE(st.loss_rate, 0);
    ASSERT_LE(st.loss_rate, 1);
  }
}

TEST(LinkStateSampling, RampEndpoints) {
  RngStream rng(1, StreamKind::environment);
  const auto s5 = require_scenario("S5");
  EXPECT_DOUBLE_EQ(sample_link_state(s5, 0, 40, 6, rng).capacity, 100);
  EXPECT_NEAR(sample_link_state(s5, 39, 40, 6, rng).capacity, 30, 1e-12);
  const auto s6 = require_scenario("S6");
  const auto end = sample_link_state(s6, 39, 40, 6, rng);
  const auto width = s6.latency_ms.at(39, 40).width();
  EXPECT_NEAR(end.base_latency, 20, width + 1e-12);
}

TEST(LinkStateSampling, Deterministic) {
  const auto s3 = require_scenario("S3");
  RngStream a(5, StreamKind::environment), b(5, StreamKind::environment);
  for (int t = 0; t < 40; ++t) {
    const auto x = sample_link_state(s3, t, 40, 6, a);
    const auto y = sample_link_state(s3, t, 40, 6, b);
    ASSERT_EQ(x.capacity, y.capacity);
    ASSERT_EQ(x.base_latency, y.base_latency);
    ASSERT_EQ(x.burst_active, y.burst_active);
  }
}

TEST(Advance, UncongestedLossless) {
  RngStream rng(2, StreamKind::environment);
  const LinkModel m;
  const std::vector<double> x{10};
  const auto out = advance_link(clean_link(100), x, m, rng);
  ASSERT_EQ(out.agents.size(), 1u);
  EXPECT_EQ(out.agents[0].received_mbps, 10);
  EXPECT_EQ(out.agents[0].lost_packets, 0);
  EXPECT_EQ(out.agents[0].frame_rate, m.f_target);
}

TEST(Advance, CongestedDeliveredFraction) {
  RngStream rng(2, StreamKind::environment);
  const LinkModel m;
  const std::vector<double> x{50, 50};
  const auto out = advance_link(clean_link(60), x, m, rng);
  for (const auto& a : out.agents) {
    EXPECT_NEAR(a.received_mbps, 30, 1e-12);
    EXPECT_NEAR(a.frame_rate, 0.6 * m.f_target, 1e-12);
  }
}

TEST(Advance, LatencyGrowsWithUtilisation) {
  RngStream rng(2, StreamKind::environment);
  const LinkModel m;
  const std::vector<double> lo{10}, hi{80};
  const auto a = advance_link(clean_link(100), lo, m, rng);
  const auto b = advance_link(clean_link(100), hi, m, rng);
  EXPECT_NEAR(a.agents[0].latency_ms, 20 * (1 + 0.01), 1e-12);
  EXPECT_NEAR(b.agents[0].latency_ms, 20 * (1 + 0.64), 1e-12);
}

TEST(Advance, PacketAccounting) {
  RngStream rng(3, StreamKind::environment);
  LinkModel m;
  auto st = clean_link(50);
  st.loss_rate = 0.2;
  const std::vector<double> x{30, 40};
  for (int i = 0; i < 200; ++i) {
    const auto out = advance_link(st, x, m, rng);
    for (const auto& a : out.agents) {
      ASSERT_LE(a.lost_packets, a.sent_packets);
      ASSERT_EQ(a.nacks, a.lost_packets);
      ASSERT_GE(a.lost_packets, 0);
    }
  }
}

TEST(Env, ConservationAcrossScenarios) {
  SimConfig sim;
  for (const auto& spec : builtin_scenarios()) {
    NetworkEnv env(sim, QoECoefficients{}, 40, RngStream(9, StreamKind::environment));
    RngStream pick(9, StreamKind::misc);
    env.reset(spec);
    while (!env.done()) {
      std::vector<double> x(6);
      for (auto& v : x) v = pick.uniform(1, 200);
      const auto s = env.step(x);
      double total = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& o = s.observations[i];
        ASSERT_LE(o.received_mbps, o.target_mbps) << spec.name;
        ASSERT_TRUE(o.valid()) << spec.name;
        total += o.received_mbps;
      }
      ASSERT_LE(total, s.outcome.capacity + 1e-9) << spec.name;
    }
  }
}

TEST(Env, LosslessScenarioUnderCapacityLosesNothing) {
  SimConfig sim;
  sim.agents = 2;
  NetworkEnv env(sim, QoECoefficients{}, 40, RngStream(4, StreamKind::environment));
  env.reset(require_scenario("C50"));
  const std::vector<double> x{20, 25};
  while (!env.done()) {
    const auto s = env.step(x);
    for (const auto& o : s.observations) ASSERT_EQ(o.lost_packets, 0);
  }
}

TEST(Env, DeterministicObservations) {
  SimConfig sim;
  auto run = [&] {
    NetworkEnv env(sim, QoECoefficients{}, 40, RngStream(77, StreamKind::environment));
    env.reset(require_scenario("S5"));
    std::vector<Observation> all;
    std::vector<double> x(6, 20);
    while (!env.done()) {
      const auto s = env.step(x);
      all.insert(all.end(), s.observations.begin(), s.observations.end());
      for (auto& v : x) v += 3;
    }
    return all;
  };
  EXPECT_EQ(run(), run());
}

TEST(Env, RejectsWrongTargetCountAndOverrun) {
  SimConfig sim;
  sim.agents = 2;
  NetworkEnv env(sim, QoECoefficients{}, 2, RngStream(1, StreamKind::environment));
  env.reset(require_scenario("S1"));
  const std::vector<double> one{10};
  EXPECT_THROW(env.step(one), DataError);
  const std::vector<double> two{10, 10};
  env.step(two);
  env.step(two);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step(two), DataError);
}

TEST(Env, UserSchedule) {
  SimConfig sim;
  sim.agents = 1;
  sim.user_schedule = {1, 3};
  NetworkEnv env(sim, QoECoefficients{}, 4, RngStream(1, StreamKind::environment));
  env.reset(require_scenario("S1"));
  const std::vector<double> x{10};
  EXPECT_EQ(env.step(x).outcome.users, 1);
  EXPECT_EQ(env.step(x).outcome.users, 3);
}
