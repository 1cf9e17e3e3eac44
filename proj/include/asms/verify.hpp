#pragma once

// Self-checks run by `asms verify`: oracle comparisons, invariants and a few
// seeded end-to-end properties, each small enough for a desk machine.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "asms/checkpoint.hpp"
#include "asms/config.hpp"
#include "asms/core.hpp"
#include "asms/fed.hpp"
#include "asms/netsim.hpp"
#include "asms/nn.hpp"
#include "asms/oracles.hpp"
#include "asms/qoe_fit.hpp"
#include "asms/rl.hpp"
#include "asms/rng.hpp"
#include "asms/trainer.hpp"

namespace asms::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

inline std::string printf_str(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// ------------------------------------------------------------ gradients

struct GradSuite {
  double actor_max = 0;
  double critic_max = 0;
  int nets = 0;
};

inline std::vector<rl::Sample> random_samples(std::size_t n, std::size_t actions, const nn::ModelParams& pi,
                                              RngStream& rng) {
  std::vector<rl::Sample> out;
  for (std::size_t k = 0; k < n; ++k) {
    rl::Sample s;
    for (auto& v : s.obs) v = rng.uniform(0.0, 1.5);
    s.action = rng.below(actions);
    const auto lp = nn::categorical_head(nn::forward(pi, s.obs).first).log_probs[s.action];
    // Spread ratios across and beyond the clip band.
    s.old_log_prob = lp + rng.uniform(-0.5, 0.5);
    s.advantage = rng.normal(0.0, 1.0);
    s.ret = rng.normal(0.0, 2.0);
    out.push_back(s);
  }
  return out;
}

/// Analytic vs central-difference gradients of both losses on `nets` random
/// networks. Coordinates whose perturbation flips a ReLU unit are excluded,
/// since the loss is not differentiable there.
inline GradSuite gradient_suite(std::uint64_t seed, int nets) {
  RngStream rng(seed, StreamKind::misc, 501);
  GradSuite out;
  const HyperParams hp;
  for (int k = 0; k < nets; ++k) {
    const int hidden = k == 0 ? hp.hidden_width : 4 + static_cast<int>(rng.below(29));
    const std::size_t actions = 2 + rng.below(6);
    auto pi = nn::init_mlp(rl::kObsDim, hidden, static_cast<int>(actions), hp.actor_activation,
                           nn::Head::categorical_logits, rng);
    auto v = nn::init_mlp(rl::kObsDim, hidden, 1, hp.critic_activation, nn::Head::scalar, rng);
    // Non-zero biases so ReLU units are not all at the same operating point.
    for (auto& x : v.mutable_values()) x += rng.uniform(-0.05, 0.05);
    for (auto& x : pi.mutable_values()) x += rng.uniform(-0.05, 0.05);
    const auto samples = random_samples(8, actions, pi, rng);

    std::vector<double> gpi(pi.size(), 0.0);
    rl::policy_loss(pi, samples, hp.clip_eps, hp.entropy_coef, gpi);
    auto ploss = [&](const nn::ModelParams& p) {
      return rl::policy_loss(p, samples, hp.clip_eps, hp.entropy_coef).loss;
    };
    const auto ra = nn::grad_check(pi, ploss, gpi, rng, 200);
    out.actor_max = std::max(out.actor_max, ra.max_rel_error);

    std::vector<double> gv(v.size(), 0.0);
    rl::value_loss(v, samples, gv);
    auto relu_pattern = [&](const nn::ModelParams& p) {
      std::vector<bool> pat;
      nn::ForwardCache c;
      for (const auto& s : samples) {
        nn::forward_into(p, s.obs, c);
        for (const auto& z : c.pre)
          for (double e : z) pat.push_back(e > 0);
      }
      return pat;
    };
    const auto base = relu_pattern(v);
    bool kink = false;
    auto vloss = [&](const nn::ModelParams& p) {
      if (relu_pattern(p) != base) kink = true;
      return rl::value_loss(p, samples);
    };
    // Check coordinates one at a time so kinked ones can be skipped.
    RngStream pick(seed, StreamKind::misc, 600 + static_cast<std::uint32_t>(k));
    for (int c = 0; c < 200; ++c) {
      const std::size_t idx = pick.below(v.size());
      nn::ModelParams probe = v;
      kink = false;
      const double h = 1e-5;
      const double orig = probe.values()[idx];
      probe.mutable_values()[idx] = orig + h;
      const double up = vloss(probe);
      probe.mutable_values()[idx] = orig - h;
      const double down = vloss(probe);
      if (kink) continue;
      const double num = (up - down) / (2 * h);
      const double rel = std::fabs(num - gv[idx]) / std::max({std::fabs(num), std::fabs(gv[idx]), 1e-8});
      out.critic_max = std::max(out.critic_max, rel);
    }
    ++out.nets;
  }
  return out;
}

// ------------------------------------------------------------ individual checks

inline CheckResult check_gradients(std::uint64_t seed, int nets = 20) {
  const auto s = gradient_suite(seed, nets);
  const bool ok = s.actor_max < 1e-4 && s.critic_max < 1e-4 && s.nets >= nets;
  return {"gradient check (actor surrogate+entropy, critic MSE)", ok,
          printf_str("%d nets, max rel err actor %.2e critic %.2e (limit 1e-4)", s.nets, s.actor_max,
                     s.critic_max)};
}

inline CheckResult check_gradient_fault_detected(std::uint64_t seed) {
  auto& scale = nn::testing::layer1_grad_scale();
  const double saved = scale;
  scale = 1.01;
  const auto s = gradient_suite(seed, 2);
  scale = saved;
  const bool ok = s.actor_max > 1e-4 && s.critic_max > 1e-4;
  return {"gradient check detects a corrupted backward path", ok,
          printf_str("with layer-1 gradient x1.01: actor %.2e critic %.2e (must exceed 1e-4)", s.actor_max,
                     s.critic_max)};
}

inline rl::Trajectory random_trajectory(std::size_t T, RngStream& rng) {
  rl::Trajectory t;
  for (std::size_t i = 0; i < T; ++i) {
    t.obs.push_back({});
    t.actions.push_back(0);
    t.log_probs.push_back(-1.0);
    t.rewards.push_back(rng.normal(0.0, 3.0));
    t.values.push_back(rng.normal(0.0, 5.0));
  }
  t.bootstrap_value = rng.normal(0.0, 5.0);
  t.complete = true;
  return t;
}

inline CheckResult check_gae_returns(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 502);
  double worst = 0;
  for (std::size_t T : {1, 5, 40, 64}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto t = random_trajectory(T, rng);
      const double g = rng.uniform(0.0, 1.0), l = rng.uniform(0.0, 1.0);
      const auto a = rl::compute_gae(t, g, l), ao = oracle::gae(t, g, l);
      const auto r = rl::compute_returns(t, g), ro = oracle::returns(t, g);
      for (std::size_t i = 0; i < T; ++i) {
        worst = std::max({worst, std::fabs(a[i] - ao[i]), std::fabs(r[i] - ro[i])});
      }
    }
  }
  return {"GAE and truncated returns vs direct sums", worst < 1e-10,
          printf_str("T in {1,5,40,64}, max abs diff %.2e (limit 1e-10)", worst)};
}

inline CheckResult check_clip_cases() {
  struct Case {
    double r, a, expect;
  };
  const double eps = 0.2;
  const Case cases[] = {
      {1.1, 2.0, 2.2},   // A>0, inside band
      {0.5, 2.0, 1.0},   // A>0, below band
      {1.5, 2.0, 2.4},   // A>0, above band
      {1.1, -1.0, -1.1}, // A<0, inside band
      {0.5, -1.0, -0.8}, // A<0, below band
      {1.5, -1.0, -1.5}, // A<0, above band
  };
  int ok = 0;
  std::string bad;
  for (const auto& c : cases) {
    const double got = rl::clipped_objective(std::log(c.r), 0.0, c.a, eps);
    const double orc = oracle::clipped_objective(c.r, c.a, eps);
    if (std::fabs(got - c.expect) <= 1e-12 && std::fabs(orc - c.expect) <= 1e-12) {
      ++ok;
    } else {
      bad += printf_str(" (r=%g,A=%g got %.15g)", c.r, c.a, got);
    }
  }
  return {"clipped objective, 6 sign/band cases", ok == 6, printf_str("%d/6 exact%s", ok, bad.c_str())};
}

inline CheckResult check_max_min(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 503);
  double worst = 0, worst_cons = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(0.0, 200.0);
    const double c = rng.uniform(0.0, 600.0);
    const auto y = allocate_max_min(x, c);
    const auto yo = oracle::water_fill(x, c);
    double sum_y = 0, sum_x = 0;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::fabs(y[i] - yo[i]));
      sum_y += y[i];
      sum_x += x[i];
      if (y[i] > x[i]) worst = std::max(worst, y[i] - x[i] + 1.0);
    }
    worst_cons = std::max(worst_cons, std::fabs(sum_y - std::min(sum_x, c)));
  }
  return {"max-min allocation vs water-filling oracle", worst < 1e-9 && worst_cons < 1e-9,
          printf_str("1000 instances, max diff %.2e, max conservation error %.2e (limit 1e-9)", worst,
                     worst_cons)};
}

inline CheckResult check_fedavg(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 504);
  const HyperParams hp;
  double worst = 0;
  bool perm_ok = true, fixed_ok = true, hull_ok = true;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 1 + rng.below(7);
    std::vector<fed::LocalUpdate> ups;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
      auto g = fed::init_global(rl::kObsDim, 8, 5, hp, rng);
      ups.push_back({static_cast<int>(i), g.policy, g.value, 0, 0});
      w.push_back(rng.uniform(0.1, 50.0));
    }
    const auto g = fed::fedavg(ups, w);
    std::vector<std::vector<double>> xs;
    for (const auto& u : ups) xs.emplace_back(u.policy.values().begin(), u.policy.values().end());
    const auto o = oracle::weighted_mean(xs, w);
    for (std::size_t k = 0; k < o.size(); ++k) {
      worst = std::max(worst, std::fabs(g.policy.values()[k] - o[k]));
      double lo = xs[0][k], hi = xs[0][k];
      for (const auto& x : xs) {
        lo = std::min(lo, x[k]);
        hi = std::max(hi, x[k]);
      }
      hull_ok = hull_ok && g.policy.values()[k] >= lo && g.policy.values()[k] <= hi;
    }
    // Reverse the (update, weight) pairs.
    auto ups_r = ups;
    auto w_r = w;
    std::reverse(ups_r.begin(), ups_r.end());
    std::reverse(w_r.begin(), w_r.end());
    const auto gr = fed::fedavg(ups_r, w_r);
    perm_ok = perm_ok && gr.policy == g.policy && gr.value == g.value;
    // Identical inputs.
    std::vector<fed::LocalUpdate> same(n, ups[0]);
    const auto gs = fed::fedavg(same, w);
    fixed_ok = fixed_ok && gs.policy == ups[0].policy && gs.value == ups[0].value;
  }
  return {"FedAvg vs weighted-mean oracle, permutation, fixed point, hull",
          worst < 1e-12 && perm_ok && fixed_ok && hull_ok,
          printf_str("max diff %.2e (limit 1e-12), permutation %s, identical-input %s, hull %s", worst,
                     perm_ok ? "bit-exact" : "DIFFERS", fixed_ok ? "bit-exact" : "DIFFERS",
                     hull_ok ? "ok" : "VIOLATED")};
}

inline CheckResult check_laplace(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 505);
  const int n = 1000000;
  double mean = 0, m2 = 0;
  for (int i = 1; i <= n; ++i) {
    const double x = rng.laplace(1.0);
    const double d = x - mean;
    mean += d / i;
    m2 += d * (x - mean);
  }
  const double var = m2 / n;
  const bool ok = std::fabs(mean) < 0.005 && std::fabs(var - 2.0) <= 0.04;
  return {"Laplace(1) moments over 1e6 draws", ok,
          printf_str("mean %.5f (|mean| < 0.005), variance %.4f (2 +- 2%%)", mean, var)};
}

inline CheckResult check_ldp_noop(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 506);
  const HyperParams hp;
  const auto g = fed::init_global(rl::kObsDim, 16, 5, hp, rng);
  const auto before = rng.counter();
  const auto out = fed::ldp_perturb(g.policy, 0.0, 1.0, rng);
  const bool ok = out == g.policy && rng.counter() == before;
  return {"LDP with zero sensitivity is a bit-exact no-op", ok,
          ok ? "parameters unchanged, no randomness consumed" : "parameters or RNG changed"};
}

inline CheckResult check_forward(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 507);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const auto act = k % 2 ? Activation::relu : Activation::tanh;
    auto p = nn::init_mlp(rl::kObsDim, 3 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(6)),
                          act, nn::Head::scalar, rng);
    for (auto& v : p.mutable_values()) v += rng.uniform(-0.1, 0.1);
    std::vector<double> x(rl::kObsDim);
    for (auto& v : x) v = rng.uniform(-1.0, 2.0);
    const auto a = nn::forward(p, x).first;
    const auto b = oracle::forward(p, x);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return {"MLP forward vs straight-line oracle", worst < 1e-12,
          printf_str("20 nets, max diff %.2e (limit 1e-12)", worst)};
}

inline CheckResult check_whitening(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 508);
  double worst_mean = 0, worst_sd = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<rl::Sample> s(2 + rng.below(200));
    for (auto& x : s) x.advantage = rng.normal(rng.uniform(-50, 50), rng.uniform(0.01, 100));
    rl::whiten(s);
    double m = 0;
    for (const auto& x : s) m += x.advantage / static_cast<double>(s.size());
    double v = 0;
    for (const auto& x : s) v += (x.advantage - m) * (x.advantage - m) / static_cast<double>(s.size());
    worst_mean = std::max(worst_mean, std::fabs(m));
    worst_sd = std::max(worst_sd, std::fabs(std::sqrt(v) - 1.0));
  }
  return {"advantage whitening", worst_mean < 1e-9 && worst_sd < 1e-6,
          printf_str("max |mean| %.2e (1e-9), max |sd-1| %.2e (1e-6)", worst_mean, worst_sd)};
}

inline CheckResult check_sampling(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 509);
  const std::vector<double> probs(5, 0.2);
  std::vector<double> counts(5, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[rl::sample_categorical(probs, rng)] += 1;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - n * 0.2) * (c - n * 0.2) / (n * 0.2);
  // chi-square(4) critical value at p = 0.01
  return {"categorical sampling uniformity", chi2 < 13.277,
          printf_str("chi2 = %.3f over 1e5 draws (< 13.277 for p > 0.01)", chi2)};
}

inline CheckResult check_table1(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 510);
  const int T = 40;
  int violations = 0;
  std::string first;
  for (const auto& s : builtin_scenarios()) {
    for (int k = 0; k < 10000; ++k) {
      const int t = static_cast<int>(rng.below(T));
      const auto st = sample_link_state(s, t, T, 6, rng);
      const auto bw = s.bandwidth_mbps.at(t, T), lat = s.latency_ms.at(t, T), jit = s.jitter_ms.at(t, T);
      const bool ok = st.capacity >= bw.lo && st.capacity <= bw.hi && st.base_latency >= lat.lo &&
                      st.base_latency <= lat.hi && st.jitter_range.lo >= jit.lo - 1e-12 &&
                      st.jitter_range.hi <= jit.hi + 1e-12 && st.loss_rate >= 0 && st.loss_rate <= 1;
      const bool in_table = st.capacity >= std::min(s.bandwidth_mbps.start.lo, s.bandwidth_mbps.end.lo) &&
                            st.capacity <= std::max(s.bandwidth_mbps.start.hi, s.bandwidth_mbps.end.hi);
      if (!ok || !in_table) {
        if (violations++ == 0) first = s.name + " t=" + std::to_string(t);
      }
    }
  }
  // Ramp endpoints.
  const auto s5 = require_scenario("S5"), s6 = require_scenario("S6");
  const auto a = sample_link_state(s5, 0, T, 6, rng), b = sample_link_state(s5, T - 1, T, 6, rng);
  const auto c = sample_link_state(s6, T - 1, T, 6, rng);
  const bool ramps = a.capacity == 100 && b.capacity == 30 && std::fabs(c.base_latency - 20) <= 1e-9;
  return {"scenario sampling stays in profile ranges", violations == 0 && ramps,
          printf_str("%d violations over 6x1e4 draws%s%s; S5 capacity %g -> %g, S6 end latency %g",
                     violations, violations ? ", first " : "", first.c_str(), a.capacity, b.capacity,
                     c.base_latency)};
}

inline CheckResult check_overhead() {
  const HyperParams hp;
  RngStream rng(1, StreamKind::misc, 0);
  const auto g = fed::init_global(rl::kObsDim, hp.hidden_width, 5, hp, rng);
  const auto bytes = fed::update_bytes(g.policy, g.value);
  const double mb = static_cast<double>(bytes) / 1e6;
  const bool ok = mb >= 0.25 && mb <= 1.0 && bytes == nn::serialize(g.policy).size() + nn::serialize(g.value).size();
  return {"per-device upload size within 2x of 0.5 MB", ok,
          printf_str("actor %zu + critic %zu params -> %zu bytes (%.3f MB) per device per round",
                     g.policy.size(), g.value.size(), bytes, mb)};
}

inline CheckResult check_checkpoint(std::uint64_t seed) {
  RngStream rng(seed, StreamKind::misc, 511);
  const HyperParams hp;
  const auto g = fed::init_global(rl::kObsDim, 32, 5, hp, rng);
  auto bytes = nn::serialize(g.policy);
  const bool round_trip = nn::deserialize(bytes) == g.policy;
  bytes[bytes.size() / 2] ^= 0x01;
  bool caught = false;
  try {
    nn::deserialize(bytes);
  } catch (const DataError&) {
    caught = true;
  }
  return {"checkpoint round trip and corruption detection", round_trip && caught,
          printf_str("round trip %s, single-bit flip %s", round_trip ? "bit-exact" : "DIFFERS",
                     caught ? "rejected" : "ACCEPTED")};
}

inline CheckResult check_qoe_fit(std::uint64_t seed) {
  const QoECoefficients truth;
  const auto grid = CoefficientGrid::standard();
  const auto clean = make_synthetic_ratings(truth, 200, 0.0, seed);
  const auto fc = fit_coefficients(clean, grid);
  const auto noisy = make_synthetic_ratings(truth, 200, 0.2, seed);
  const auto fn = fit_coefficients(noisy, grid);
  const auto w0 = std::array{truth.alpha, truth.beta, truth.gamma, truth.delta1, truth.delta2};
  const auto wc = std::array{fc.coefficients.alpha, fc.coefficients.beta, fc.coefficients.gamma,
                             fc.coefficients.delta1, fc.coefficients.delta2};
  const auto wn = std::array{fn.coefficients.alpha, fn.coefficients.beta, fn.coefficients.gamma,
                             fn.coefficients.delta1, fn.coefficients.delta2};
  bool exact = true, near = true;
  for (int k = 0; k < 5; ++k) {
    exact = exact && std::fabs(wc[k] - w0[k]) < 1e-9;
    near = near && std::fabs(wn[k] - w0[k]) <= 0.1 + 1e-9;
  }
  return {"QoE grid search recovers generating coefficients", exact && near,
          printf_str("noiseless (%.1f,%.1f,%.1f,%.1f,%.1f) rmse %.1e; sigma 0.2 (%.1f,%.1f,%.1f,%.1f,%.1f) rmse %.3f",
                     wc[0], wc[1], wc[2], wc[3], wc[4], fc.rmse, wn[0], wn[1], wn[2], wn[3], wn[4], fn.rmse)};
}

/// Small N = 1 runs: federation without noise must equal independent PPO.
inline CheckResult check_federation_identity(std::uint64_t seed, int episodes = 12, int hidden = 16) {
  RunConfig cfg;
  cfg.sim.agents = 1;
  cfg.hp.ldp_enabled = false;
  cfg.hp.hidden_width = hidden;
  TrainOptions a;
  a.seed = seed;
  a.episodes = episodes;
  a.method = Method::fmappo;
  auto b = a;
  b.method = Method::ippo;
  const auto ra = train(cfg, a), rb = train(cfg, b);
  bool same = ra.curve.size() == rb.curve.size() && ra.learners[0].policy == rb.learners[0].policy &&
              ra.learners[0].value == rb.learners[0].value;
  for (std::size_t i = 0; same && i < ra.curve.size(); ++i) {
    same = std::bit_cast<std::uint64_t>(ra.curve[i].mean_reward) ==
           std::bit_cast<std::uint64_t>(rb.curve[i].mean_reward);
  }
  return {"single-agent noiseless federation equals independent PPO", same && !ra.overhead.empty(),
          printf_str("%d episodes, %zu rounds, curves and final parameters %s", episodes, ra.overhead.size(),
                     same ? "bit-identical" : "DIFFER")};
}

inline CheckResult check_schedule(std::uint64_t seed) {
  RunConfig cfg;
  cfg.hp.hidden_width = 8;  // schedule does not depend on width
  TrainOptions o;
  o.seed = seed;
  const auto r = train(cfg, o);
  std::vector<int> per_agent(static_cast<std::size_t>(cfg.sim.agents), 0);
  bool finite = true;
  for (const auto& d : r.diagnostics) {
    ++per_agent[static_cast<std::size_t>(d.agent)];
    finite = finite && std::isfinite(d.diag.policy_loss) && std::isfinite(d.diag.value_loss);
  }
  const int steps = cfg.hp.episodes * cfg.hp.episode_len;
  bool upd = true;
  for (int c : per_agent) upd = upd && c == steps / cfg.hp.policy_update_freq;
  bool on_schedule = true;
  for (std::size_t k = 0; k < r.overhead.size(); ++k) {
    on_schedule = on_schedule && r.overhead[k].episode == static_cast<int>(k + 1) * cfg.hp.fedavg_freq;
  }
  const bool ok = static_cast<int>(r.curve.size()) == cfg.hp.episodes && r.overhead.size() == 82 &&
                  on_schedule && upd && finite;
  return {"episode / update / aggregation schedule", ok,
          printf_str("%zu episodes x T=%d, %d updates per agent, %zu rounds at every %d episodes, losses %s",
                     r.curve.size(), cfg.hp.episode_len, per_agent.empty() ? 0 : per_agent[0],
                     r.overhead.size(), cfg.hp.fedavg_freq, finite ? "finite" : "NON-FINITE")};
}

inline CheckResult check_defaults() {
  const HyperParams hp = default_hyperparams();
  const bool ok = hp.gamma_discount == 0.95 && hp.gae_lambda == 0.95 && hp.clip_eps == 0.2 &&
                  hp.minibatch == 64 && hp.lr == 0.0003 && hp.epochs == 10 && hp.grad_clip == 0.5 &&
                  hp.policy_update_freq == 40 && hp.fedavg_freq == 4 && hp.hidden_width == 128 &&
                  hp.episode_len == 40 && hp.episodes == 330;
  return {"default hyperparameters", ok, ok ? "all table rows match" : "MISMATCH"};
}

struct Check {
  std::string id;
  std::function<CheckResult(std::uint64_t)> run;
};

inline std::vector<Check> all_checks() {
  return {
      {"defaults", [](std::uint64_t) { return check_defaults(); }},
      {"gradients", [](std::uint64_t s) { return check_gradients(s); }},
      {"gradient-fault", [](std::uint64_t s) { return check_gradient_fault_detected(s); }},
      {"forward", [](std::uint64_t s) { return check_forward(s); }},
      {"gae", [](std::uint64_t s) { return check_gae_returns(s); }},
      {"clip", [](std::uint64_t) { return check_clip_cases(); }},
      {"whitening", [](std::uint64_t s) { return check_whitening(s); }},
      {"sampling", [](std::uint64_t s) { return check_sampling(s); }},
      {"max-min", [](std::uint64_t s) { return check_max_min(s); }},
      {"scenarios", [](std::uint64_t s) { return check_table1(s); }},
      {"fedavg", [](std::uint64_t s) { return check_fedavg(s); }},
      {"laplace", [](std::uint64_t s) { return check_laplace(s); }},
      {"ldp-noop", [](std::uint64_t s) { return check_ldp_noop(s); }},
      {"checkpoint", [](std::uint64_t s) { return check_checkpoint(s); }},
      {"overhead", [](std::uint64_t) { return check_overhead(); }},
      {"qoe-fit", [](std::uint64_t s) { return check_qoe_fit(s); }},
      {"federation-identity", [](std::uint64_t s) { return check_federation_identity(s); }},
      {"schedule", [](std::uint64_t s) { return check_schedule(s); }},
  };
}

inline CheckResult timed(const Check& c, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = c.run(seed);
  } catch (const std::exception& e) {
    r = {c.id, false, std::string("threw: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace asms::verify
