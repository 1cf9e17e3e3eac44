#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "asms/checkpoint.hpp"
#include "asms/config.hpp"
#include "asms/core.hpp"
#include "asms/csv.hpp"
#include "asms/episode.hpp"
#include "asms/error.hpp"
#include "asms/fed.hpp"
#include "asms/netsim.hpp"
#include "asms/rl.hpp"
#include "asms/rng.hpp"

namespace asms {

enum class Method { fmappo, ippo };

inline const char* to_string(Method m) { return m == Method::fmappo ? "fmappo" : "ippo"; }

inline Method parse_method(const std::string& s) {
  if (s == "fmappo" || s == "f-mappo") return Method::fmappo;
  if (s == "ippo") return Method::ippo;
  throw UsageError("unknown method '" + s + "' (expected fmappo or ippo)");
}

struct CurveRow {
  int episode = 0;  // 1-based
  std::string scenario;
  double mean_reward = 0;
  std::vector<double> agent_rewards;
};

struct DiagRow {
  int episode = 0;
  int agent = 0;
  rl::UpdateDiagnostics diag;
};

struct OverheadRow {
  int round = 0;
  int episode = 0;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
  int agents = 0;
};

struct TrainOptions {
  Method method = Method::fmappo;
  std::uint64_t seed = 1;
  std::vector<std::string> scenarios;  // empty: every configured scenario
  int episodes = -1;                   // < 0: hp.episodes
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
};

struct TrainResult {
  std::vector<CurveRow> curve;
  std::vector<DiagRow> diagnostics;
  std::vector<OverheadRow> overhead;
  std::vector<rl::Learner> learners;
  fed::GlobalModel global;
  int updates = 0;
};

/// Stream layout shared by every run: environment, one stream per agent for
/// action sampling and minibatch shuffles, aggregator noise, and model init.
struct RunStreams {
  static RngStream environment(std::uint64_t seed) { return {seed, StreamKind::environment, 0}; }
  static RngStream agent(std::uint64_t seed, std::size_t i) {
    return {seed, StreamKind::agent, static_cast<std::uint32_t>(i)};
  }
  static RngStream aggregator(std::uint64_t seed) { return {seed, StreamKind::aggregator, 0}; }
  static RngStream init(std::uint64_t seed) { return {seed, StreamKind::aggregator, 1}; }
};

inline std::vector<ScenarioSpec> resolve_scenarios(const SimConfig& sim,
                                                   const std::vector<std::string>& names) {
  std::vector<ScenarioSpec> out;
  for (const auto& n : names.empty() ? sim.scenarios : names) out.push_back(require_scenario(n));
  return out;
}

inline std::string checkpoint_name(const std::string& net, std::size_t agent) {
  return "agent" + std::to_string(agent) + "_" + net + ".fmap";
}

inline void save_learners(const std::filesystem::path& dir, const std::vector<rl::Learner>& learners) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < learners.size(); ++i) {
    nn::save_checkpoint(dir / checkpoint_name("policy", i), learners[i].policy);
    nn::save_checkpoint(dir / checkpoint_name("value", i), learners[i].value);
  }
}

/// Policies stored in a checkpoint directory, one per agent file found.
inline std::vector<nn::ModelParams> load_policies(const std::filesystem::path& dir) {
  std::vector<nn::ModelParams> out;
  for (std::size_t i = 0;; ++i) {
    const auto p = dir / checkpoint_name("policy", i);
    if (!std::filesystem::exists(p)) break;
    out.push_back(nn::load_checkpoint(p));
  }
  if (out.empty()) throw DataError("no policy checkpoints in '" + dir.string() + "'");
  return out;
}

/// Multi-agent PPO training, federated (fmappo) or independent (ippo).
/// Every agent starts from the same initial networks.
inline TrainResult train(const RunConfig& cfg, const TrainOptions& opt,
                         const std::function<void(const CurveRow&)>& progress = nullptr) {
  const auto& hp = cfg.hp;
  const auto& sim = cfg.sim;
  const auto scenarios = resolve_scenarios(sim, opt.scenarios);
  if (scenarios.empty()) throw UsageError("no scenarios to train on");
  const int episodes = opt.episodes >= 0 ? opt.episodes : hp.episodes;
  const std::size_t n = static_cast<std::size_t>(sim.agents);
  const int actions = static_cast<int>(sim.delta_table.size());

  auto init_rng = RunStreams::init(opt.seed);
  TrainResult res;
  res.global = fed::init_global(rl::kObsDim, hp.hidden_width, actions, hp, init_rng);

  std::vector<TrainAgent> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    agents.emplace_back(rl::Learner(res.global.policy, res.global.value), RunStreams::agent(opt.seed, i));
  }
  NetworkEnv env(sim, cfg.qoe, hp.episode_len, RunStreams::environment(opt.seed));
  auto agg_rng = RunStreams::aggregator(opt.seed);
  const auto ppo = rl::PPOSettings::from(hp);
  std::vector<double> round_samples(n, 0.0);
  std::vector<rl::Learner*> learner_ptrs;
  for (auto& a : agents) learner_ptrs.push_back(&a.learner);

  for (int ep = 1; ep <= episodes; ++ep) {
    const auto& scenario = scenarios[static_cast<std::size_t>(ep - 1) % scenarios.size()];
    auto on_segment = [&](std::size_t i, const rl::Trajectory& seg) {
      auto& a = agents[i];
      a.buffer.push_back(seg);
      a.buffered_steps += seg.size();
      round_samples[i] += static_cast<double>(seg.size());
      if (a.buffered_steps < static_cast<std::size_t>(hp.policy_update_freq)) return;
      const auto batch = rl::build_batch(a.buffer, hp.gamma_discount, hp.gae_lambda, hp.whiten_advantages);
      auto d = rl::ppo_update(a.learner, batch, ppo, a.rng);
      if (d.aborted) {
        throw NumericError("non-finite loss in PPO update (episode " + std::to_string(ep) +
                           ", agent " + std::to_string(i) + ")");
      }
      res.diagnostics.push_back(DiagRow{ep, static_cast<int>(i), std::move(d)});
      ++res.updates;
      a.buffer.clear();
      a.buffered_steps = 0;
    };
    auto er = run_episode(env, scenario, agents, hp, cfg.qoe, sim.reward_mode, on_segment);

    CurveRow row{ep, scenario.name, er.stats.mean_reward, er.stats.agent_mean_qoe};
    if (!std::isfinite(row.mean_reward)) {
      throw NumericError("non-finite reward in episode " + std::to_string(ep));
    }
    res.curve.push_back(row);
    if (progress) progress(row);

    if (opt.method == Method::fmappo && ep % hp.fedavg_freq == 0) {
      const auto rep = fed::fed_round(learner_ptrs, res.global, round_samples, hp, agg_rng);
      res.overhead.push_back({rep.round, ep, rep.bytes_up, rep.bytes_down, rep.agents});
      std::fill(round_samples.begin(), round_samples.end(), 0.0);
    }
    if (!opt.checkpoint_dir.empty() && sim.checkpoint_every > 0 && ep % sim.checkpoint_every == 0) {
      std::vector<rl::Learner> snap;
      for (const auto& a : agents) snap.push_back(a.learner);
      char name[32];
      std::snprintf(name, sizeof name, "ep%04d", ep);
      save_learners(opt.checkpoint_dir / name, snap);
    }
  }
  for (auto& a : agents) res.learners.push_back(std::move(a.learner));
  if (!opt.checkpoint_dir.empty()) save_learners(opt.checkpoint_dir / "final", res.learners);
  return res;
}

inline void write_learning_curve(const std::filesystem::path& path, const TrainResult& r, int agents) {
  std::vector<std::string> header{"episode", "scenario", "mean_reward"};
  for (int i = 0; i < agents; ++i) header.push_back("agent" + std::to_string(i) + "_reward");
  csv::Writer w(path, header);
  for (const auto& c : r.curve) {
    std::vector<std::string> row{std::to_string(c.episode), c.scenario, csv::exact(c.mean_reward)};
    for (double v : c.agent_rewards) row.push_back(csv::exact(v));
    w.row(row);
  }
}

inline void write_diagnostics(const std::filesystem::path& path, const TrainResult& r) {
  csv::Writer w(path, {"episode", "agent", "policy_loss", "value_loss", "entropy", "clip_fraction",
                       "mean_ratio"});
  for (const auto& d : r.diagnostics) {
    w.row({std::to_string(d.episode), std::to_string(d.agent), csv::num(d.diag.policy_loss),
           csv::num(d.diag.value_loss), csv::num(d.diag.entropy), csv::num(d.diag.clip_fraction),
           csv::num(d.diag.mean_ratio)});
  }
}

inline void write_overhead(const std::filesystem::path& path, const TrainResult& r) {
  csv::Writer w(path, {"round", "episode", "bytes_up_total", "bytes_down_total", "agents"});
  for (const auto& o : r.overhead) {
    w.row({std::to_string(o.round), std::to_string(o.episode), std::to_string(o.bytes_up),
           std::to_string(o.bytes_down), std::to_string(o.agents)});
  }
}

// ---------------------------------------------------------------- evaluation

struct EvalSummary {
  std::string method;
  std::string scenario;
  int episodes = 0;
  double qoe_mean = 0;          // over every agent-step
  double qoe_std = 0;
  double episode_qoe_std = 0;   // spread of per-episode means
  double latency_mean = 0;
  double lost_packets_mean = 0;
  double frame_rate_mean = 0;
  double received_mean = 0;
};

using ControllerFactory = std::function<std::vector<std::unique_ptr<Controller>>(std::size_t scenario_index)>;

/// Plays `episodes` episodes of each scenario. Each scenario gets its own
/// environment stream so adding scenarios does not change the others.
inline std::vector<EvalSummary> evaluate(const RunConfig& cfg, const std::vector<ScenarioSpec>& scenarios,
                                         const std::string& method, const ControllerFactory& make,
                                         int episodes, std::uint64_t seed,
                                         const TraceSink& trace = nullptr) {
  if (episodes <= 0) throw UsageError("evaluation needs at least one episode");
  std::vector<EvalSummary> out;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    NetworkEnv env(cfg.sim, cfg.qoe, cfg.hp.episode_len, RngStream(seed, StreamKind::environment, static_cast<std::uint32_t>(100 + s)));
    auto controllers = make(s);
    EvalSummary sum{method, scenarios[s].name, episodes};
    double sq = 0, count = 0;
    std::vector<double> ep_means;
    TraceSink sink = [&](const TraceRow& r) {
      sum.qoe_mean += r.qoe;
      sq += r.qoe * r.qoe;
      count += 1;
      if (trace) trace(r);
    };
    for (int e = 0; e < episodes; ++e) {
      const auto st = run_controlled_episode(env, scenarios[s], controllers, cfg.qoe, cfg.sim.reward_mode, sink);
      ep_means.push_back(st.mean_reward);
      sum.latency_mean += st.mean_latency / episodes;
      sum.lost_packets_mean += st.mean_lost_packets / episodes;
      sum.frame_rate_mean += st.mean_frame_rate / episodes;
      sum.received_mean += st.mean_received / episodes;
    }
    sum.qoe_mean /= count;
    sum.qoe_std = std::sqrt(std::max(0.0, sq / count - sum.qoe_mean * sum.qoe_mean));
    double m = 0;
    for (double v : ep_means) m += v / episodes;
    double v2 = 0;
    for (double v : ep_means) v2 += (v - m) * (v - m) / episodes;
    sum.episode_qoe_std = std::sqrt(v2);
    out.push_back(sum);
  }
  return out;
}

/// Controllers for evaluating trained policies greedily. A single stored
/// policy is shared by every agent.
inline ControllerFactory policy_factory(const std::vector<nn::ModelParams>& policies, const SimConfig& sim) {
  if (policies.size() != 1 && policies.size() != static_cast<std::size_t>(sim.agents)) {
    throw DataError("checkpoint holds " + std::to_string(policies.size()) + " policies for " +
                    std::to_string(sim.agents) + " agents");
  }
  for (const auto& p : policies) {
    if (p.shapes().front().in != rl::kObsDim ||
        p.shapes().back().out != static_cast<int>(sim.delta_table.size())) {
      throw DataError("checkpoint shape does not match the configured observation/action sizes");
    }
  }
  return [policies, sim](std::size_t) {
    std::vector<std::unique_ptr<Controller>> c;
    for (std::size_t i = 0; i < static_cast<std::size_t>(sim.agents); ++i) {
      const auto& p = policies.size() == 1 ? policies[0] : policies[i];
      c.push_back(std::make_unique<PolicyController>(p, sim.y_max, true, RngStream(0, StreamKind::misc, static_cast<std::uint32_t>(i))));
    }
    return c;
  };
}

inline ControllerFactory rule_factory(const std::string& method, const RunConfig& cfg, std::uint64_t seed) {
  const auto sim = cfg.sim;
  const double p_th = cfg.qoe.p_threshold;
  if (method == "delay-gradient") {
    return [sim, p_th](std::size_t) {
      std::vector<std::unique_ptr<Controller>> c;
      for (int i = 0; i < sim.agents; ++i) c.push_back(std::make_unique<DelayGradientAgent>(sim.delta_table, p_th));
      return c;
    };
  }
  if (method == "bandwidth-probe") {
    return [sim](std::size_t) {
      std::vector<std::unique_ptr<Controller>> c;
      for (int i = 0; i < sim.agents; ++i) c.push_back(std::make_unique<BandwidthProbeAgent>(sim.delta_table));
      return c;
    };
  }
  if (method == "random") {
    return [sim, seed](std::size_t s) {
      std::vector<std::unique_ptr<Controller>> c;
      for (int i = 0; i < sim.agents; ++i) {
        c.push_back(std::make_unique<RandomController>(
            sim.delta_table.size(), RngStream(seed, StreamKind::misc, static_cast<std::uint32_t>(1000 * (s + 1) + static_cast<std::size_t>(i)))));
      }
      return c;
    };
  }
  throw UsageError("unknown rule-based method '" + method + "' (delay-gradient, bandwidth-probe, random)");
}

}  // namespace asms
