// asms: train, evaluate and compare bitrate controllers on the simulated
// shared link, fit QoE weights to ratings, and run the self-checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asms/checkpoint.hpp"
#include "asms/config.hpp"
#include "asms/csv.hpp"
#include "asms/error.hpp"
#include "asms/qoe_fit.hpp"
#include "asms/svg.hpp"
#include "asms/trainer.hpp"
#include "asms/verify.hpp"

namespace fs = std::filesystem;
using namespace asms;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kVerify = 3;

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  std::vector<std::string> scenarios;
};

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw DataError("cannot create output directory '" + p.string() + "'");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << text;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  Common c;
  std::string method = "fmappo";
  int episodes = -1;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  if (a.c.out.empty()) throw UsageError("train needs --out");
  const auto cfg = config_or_default(a.c.config);
  TrainOptions opt;
  opt.method = parse_method(a.method);
  opt.seed = a.c.seed;
  opt.scenarios = a.c.scenarios;
  opt.episodes = a.episodes;
  const fs::path out = a.c.out;
  ensure_dir(out);
  opt.checkpoint_dir = out / "checkpoints";
  const auto scenarios = resolve_scenarios(cfg.sim, opt.scenarios);

  write_text(out / "config.conf", serialize_config(cfg));
  auto progress = [&](const CurveRow& r) {
    if (!a.quiet && (r.episode % 10 == 0 || r.episode == 1)) {
      std::fprintf(stderr, "episode %4d  %-3s  mean reward %10.4f\n", r.episode, r.scenario.c_str(),
                   r.mean_reward);
    }
  };
  const auto res = train(cfg, opt, progress);

  write_learning_curve(out / "learning_curve.csv", res, cfg.sim.agents);
  write_diagnostics(out / "diagnostics.csv", res);
  write_overhead(out / "overhead.csv", res);

  std::vector<double> xs, ys;
  for (const auto& r : res.curve) {
    xs.push_back(r.episode);
    ys.push_back(r.mean_reward);
  }
  const std::size_t window = std::max<std::size_t>(1, 5 * scenarios.size());
  svg::write_file(out / "learning_curve.svg",
                  svg::line_chart(std::string(to_string(opt.method)) + " training reward", "episode",
                                  "mean reward",
                                  {{"episode", xs, ys},
                                   {"moving average (" + std::to_string(window) + ")", xs,
                                    svg::moving_average(ys, window)}}));

  nlohmann::ordered_json m;
  m["tool"] = "asms";
  m["version"] = ASMS_VERSION;
  m["command"] = "train";
  m["method"] = to_string(opt.method);
  m["seed"] = opt.seed;
  m["config"] = "config.conf";
  std::vector<std::string> names;
  for (const auto& s : scenarios) names.push_back(s.name);
  m["scenarios"] = names;
  m["episodes"] = res.curve.size();
  m["agents"] = cfg.sim.agents;
  m["ppo_updates"] = res.updates;
  m["aggregation_rounds"] = res.overhead.size();
  m["actor_params"] = res.learners.front().policy.size();
  m["critic_params"] = res.learners.front().value.size();
  m["upload_bytes_per_device_per_round"] =
      fed::update_bytes(res.learners.front().policy, res.learners.front().value);
  m["files"] = {{"learning_curve", "learning_curve.csv"},
                {"diagnostics", "diagnostics.csv"},
                {"overhead", "overhead.csv"},
                {"plot", "learning_curve.svg"},
                {"final_checkpoint", "checkpoints/final"}};
  write_text(out / "manifest.json", m.dump(2) + "\n");

  double tail = 0;
  const std::size_t k = std::min<std::size_t>(20, res.curve.size());
  for (std::size_t i = res.curve.size() - k; i < res.curve.size(); ++i) tail += res.curve[i].mean_reward / k;
  std::printf("trained %s: %zu episodes, %d updates, %zu rounds; mean reward over last %zu episodes %.4f\n",
              to_string(opt.method), res.curve.size(), res.updates, res.overhead.size(), k, tail);
  return kOk;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  Common c;
  std::string checkpoint;
  std::string method;
  std::string name;
  int episodes = -1;
  bool trace = false;
};

int cmd_eval(const EvalArgs& a) {
  if (a.c.out.empty()) throw UsageError("eval needs --out");
  if (a.checkpoint.empty() == a.method.empty()) {
    throw UsageError("eval needs exactly one of --checkpoint or --method");
  }
  std::string config_path = a.c.config;
  fs::path ckpt_dir;
  std::string label = a.name;
  if (!a.checkpoint.empty()) {
    const fs::path p = a.checkpoint;
    if (!fs::exists(p)) throw DataError("checkpoint path '" + p.string() + "' does not exist");
    // A run directory: use its config, final checkpoint and method name.
    if (fs::exists(p / "manifest.json")) {
      if (config_path.empty()) config_path = (p / "config.conf").string();
      ckpt_dir = p / "checkpoints" / "final";
      if (label.empty()) {
        std::ifstream in(p / "manifest.json");
        try {
          label = nlohmann::json::parse(in).value("method", "policy");
        } catch (const nlohmann::json::exception& e) {
          throw DataError("unreadable manifest in '" + p.string() + "': " + e.what());
        }
      }
    } else {
      ckpt_dir = p;
    }
    if (label.empty()) label = "policy";
  } else if (label.empty()) {
    label = a.method;
  }
  const auto cfg = config_or_default(config_path);
  const auto scenarios = resolve_scenarios(cfg.sim, a.c.scenarios);
  const int episodes = a.episodes > 0 ? a.episodes : cfg.sim.eval_episodes;
  const auto factory = ckpt_dir.empty() ? rule_factory(a.method, cfg, a.c.seed)
                                        : policy_factory(load_policies(ckpt_dir), cfg.sim);

  const fs::path out = a.c.out;
  ensure_dir(out);
  std::optional<csv::Writer> trace;
  TraceSink sink;
  std::size_t rows = 0;
  if (a.trace) {
    trace.emplace(out / "trace.csv", std::vector<std::string>{"scenario", "episode", "t", "agent", "x", "y", "l", "j",
                                                           "p", "n", "f", "capacity", "u", "qoe"});
    // Rows arrive scenario by scenario, episode by episode.
    const std::size_t per_episode = static_cast<std::size_t>(cfg.hp.episode_len * cfg.sim.agents);
    const std::size_t per_scenario = per_episode * static_cast<std::size_t>(episodes);
    sink = [&, per_episode, per_scenario](const TraceRow& r) {
      const std::size_t s = rows / per_scenario;
      const std::size_t e = (rows % per_scenario) / per_episode;
      ++rows;
      trace->row({scenarios[s].name, std::to_string(e), std::to_string(r.t), std::to_string(r.agent),
                  csv::num(r.obs.target_mbps), csv::num(r.obs.received_mbps), csv::num(r.obs.latency_ms),
                  csv::num(r.obs.jitter_ms), csv::num(r.obs.lost_packets), csv::num(r.obs.nacks),
                  csv::num(r.frame_rate), csv::num(r.capacity), csv::num(r.users), csv::num(r.qoe)});
    };
  }
  const auto all = evaluate(cfg, scenarios, label, factory, episodes, a.c.seed, sink);
  csv::Writer w(out / "eval_summary.csv",
                {"method", "scenario", "qoe_mean", "qoe_std", "episode_qoe_std", "latency_ms_mean",
                 "lost_packets_mean", "frame_rate_mean", "received_mbps_mean", "episodes", "seed"});
  std::printf("%-16s %-4s %10s %9s %9s %9s %8s\n", "method", "scen", "qoe_mean", "qoe_std", "lat_ms", "lost",
              "fps");
  for (const auto& s : all) {
    w.row({s.method, s.scenario, csv::num(s.qoe_mean), csv::num(s.qoe_std), csv::num(s.episode_qoe_std),
           csv::num(s.latency_mean), csv::num(s.lost_packets_mean), csv::num(s.frame_rate_mean),
           csv::num(s.received_mean), std::to_string(s.episodes), std::to_string(a.c.seed)});
    std::printf("%-16s %-4s %10.4f %9.4f %9.2f %9.2f %8.2f\n", s.method.c_str(), s.scenario.c_str(), s.qoe_mean,
                s.qoe_std, s.latency_mean, s.lost_packets_mean, s.frame_rate_mean);
  }
  return kOk;
}

// ------------------------------------------------------------------ compare

struct CompareArgs {
  Common c;
  std::vector<std::string> sources;
};

struct Cell {
  double mean = 0;
  double sd = 0;
};

// Source syntax: [label=]path, path being an eval directory or a CSV with
// (method, scenario, qoe_mean, qoe_std) columns.
void ingest(const std::string& source, std::map<std::string, std::map<std::string, Cell>>& cells) {
  std::string label;
  fs::path path = source;
  if (const auto eq = source.find('='); eq != std::string::npos && !fs::exists(source)) {
    label = source.substr(0, eq);
    path = source.substr(eq + 1);
  }
  if (fs::is_directory(path)) path /= "eval_summary.csv";
  if (!fs::exists(path)) throw DataError("comparison source '" + path.string() + "' not found");
  const auto t = csv::read(path);
  const int cm = t.column("method"), cs = t.column("scenario"), cq = t.column("qoe_mean"), cd = t.column("qoe_std");
  if (cs < 0 || cq < 0 || cd < 0 || (cm < 0 && label.empty())) {
    throw DataError(path.string() + ": needs columns method, scenario, qoe_mean, qoe_std");
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const int line = t.lines[i];
    const std::string method = label.empty() ? r[static_cast<std::size_t>(cm)] : label;
    const std::string scen = r[static_cast<std::size_t>(cs)];
    auto& row = cells[method];
    if (row.count(scen)) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": duplicate entry for method '" + method +
                      "' scenario '" + scen + "' (prefix the source with label=)");
    }
    row[scen] = {csv::to_double(r[static_cast<std::size_t>(cq)], path, line),
                 csv::to_double(r[static_cast<std::size_t>(cd)], path, line)};
  }
}

int cmd_compare(const CompareArgs& a) {
  if (a.c.out.empty()) throw UsageError("compare needs --out");
  if (a.sources.size() < 2) throw UsageError("compare needs at least two sources");
  std::map<std::string, std::map<std::string, Cell>> cells;  // ordered by name
  std::vector<std::set<std::string>> per_source;
  for (const auto& s : a.sources) {
    std::map<std::string, std::map<std::string, Cell>> mine;
    ingest(s, mine);
    std::set<std::string> scen;
    for (const auto& [m, row] : mine) {
      for (const auto& [sc, cell] : row) {
        scen.insert(sc);
        if (cells[m].count(sc)) {
          throw DataError("method '" + m + "' scenario '" + sc + "' appears in more than one source (use label=path)");
        }
        cells[m][sc] = cell;
      }
    }
    per_source.push_back(std::move(scen));
  }
  std::set<std::string> common = per_source.front();
  for (const auto& s : per_source) {
    std::set<std::string> keep;
    std::set_intersection(common.begin(), common.end(), s.begin(), s.end(), std::inserter(keep, keep.begin()));
    common = std::move(keep);
  }
  if (common.empty()) throw DataError("the comparison sources share no scenario");

  std::set<std::string> scenarios;
  for (const auto& [m, row] : cells)
    for (const auto& [sc, cell] : row) scenarios.insert(sc);
  if (!a.c.scenarios.empty()) {
    std::set<std::string> wanted(a.c.scenarios.begin(), a.c.scenarios.end());
    std::set<std::string> keep;
    for (const auto& s : scenarios)
      if (wanted.count(s)) keep.insert(s);
    scenarios = std::move(keep);
  }

  const fs::path out = a.c.out;
  ensure_dir(out);
  std::vector<std::string> header{"method"};
  header.insert(header.end(), scenarios.begin(), scenarios.end());
  csv::Writer mean(out / "comparison_qoe_mean.csv", header);
  csv::Writer sd(out / "comparison_qoe_std.csv", header);
  for (const auto& [m, row] : cells) {
    std::vector<std::string> a_row{m}, b_row{m};
    for (const auto& sc : scenarios) {
      const auto it = row.find(sc);
      a_row.push_back(it == row.end() ? "" : csv::num(it->second.mean));
      b_row.push_back(it == row.end() ? "" : csv::num(it->second.sd));
    }
    mean.row(a_row);
    sd.row(b_row);
  }
  for (const auto& sc : scenarios) {
    std::vector<svg::Bar> bars;
    for (const auto& [m, row] : cells) {
      const auto it = row.find(sc);
      if (it == row.end()) {
        bars.push_back({m, std::nullopt, std::nullopt});
      } else {
        bars.push_back({m, it->second.mean, it->second.sd});
      }
    }
    svg::write_file(out / ("compare_" + sc + ".svg"), svg::bar_chart("mean QoE, " + sc, "QoE", bars));
  }
  std::printf("compared %zu methods over %zu scenarios -> %s\n", cells.size(), scenarios.size(),
              (out / "comparison_qoe_mean.csv").string().c_str());
  return kOk;
}

// ------------------------------------------------------------------ fit-qoe

struct FitArgs {
  Common c;
  std::string ratings;
  std::string grid;
};

std::string axis_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += csv::num(v[i]);
  }
  return s;
}

int cmd_fit_qoe(const FitArgs& a) {
  if (a.ratings.empty()) throw UsageError("fit-qoe needs --ratings");
  const auto cfg = config_or_default(a.c.config);
  const auto records = read_ratings_csv(a.ratings);
  if (records.empty()) throw DataError("'" + a.ratings + "' contains no ratings");
  const auto grid = a.grid.empty() ? CoefficientGrid::standard() : load_grid(a.grid);
  const auto fit = fit_coefficients(records, grid, cfg.qoe);
  const auto sens = coefficient_sensitivity(fit.coefficients, records);

  std::string rep;
  rep += "ratings: " + a.ratings + " (" + std::to_string(records.size()) + " records)\n";
  rep += "grid searched (" + std::to_string(grid.size()) + " candidates):\n";
  const char* names[5] = {"alpha", "beta", "gamma", "delta1", "delta2"};
  const auto axes = grid.axes();
  for (int k = 0; k < 5; ++k) rep += std::string("  ") + names[k] + " = " + axis_text(*axes[k]) + "\n";
  const auto& c = fit.coefficients;
  rep += verify::printf_str("fitted: alpha=%g beta=%g gamma=%g delta1=%g delta2=%g\n", c.alpha, c.beta, c.gamma,
                            c.delta1, c.delta2);
  rep += verify::printf_str("rmse=%.6f r2=%.6f mos=%.6f*qoe%+.6f\n", fit.rmse, fit.r_squared, fit.scale, fit.offset);
  rep += "sensitivity (rmse change when one weight is scaled):\n";
  rep += "  coefficient  -20%_delta  +20%_delta  -20%_pct  +20%_pct\n";
  auto pct = [](double v) { return std::isfinite(v) ? verify::printf_str("%9.3f", v) : std::string("      n/a"); };
  for (const auto& r : sens.rows) {
    rep += verify::printf_str("  %-11s %11.6f %11.6f ", r.coefficient.c_str(), r.minus20_delta, r.plus20_delta) +
           pct(r.minus20_pct) + " " + pct(r.plus20_pct) + "\n";
  }
  rep += verify::printf_str("mean |delta| %.6f, mean |pct| ", sens.mean_abs_delta) + pct(sens.mean_abs_pct) + "\n";
  std::cout << rep;
  if (!a.c.out.empty()) {
    const fs::path out = a.c.out;
    ensure_dir(out);
    write_text(out / "fit_report.txt", rep);
    csv::Writer w(out / "fit_sensitivity.csv",
                  {"coefficient", "value", "minus20_delta", "plus20_delta", "minus20_pct", "plus20_pct"});
    const double vals[5] = {c.alpha, c.beta, c.gamma, c.delta1, c.delta2};
    for (std::size_t k = 0; k < sens.rows.size(); ++k) {
      const auto& r = sens.rows[k];
      w.row({r.coefficient, csv::num(vals[k]), csv::num(r.minus20_delta), csv::num(r.plus20_delta),
             std::isfinite(r.minus20_pct) ? csv::num(r.minus20_pct) : "",
             std::isfinite(r.plus20_pct) ? csv::num(r.plus20_pct) : ""});
    }
  }
  return kOk;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
  Common c;
  std::vector<std::string> only;
  bool inject_fault = false;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.inject_fault) nn::testing::layer1_grad_scale() = 1.01;
  int failed = 0, run = 0;
  for (const auto& check : verify::all_checks()) {
    if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), check.id) == a.only.end()) continue;
    const auto r = verify::timed(check, a.c.seed);
    ++run;
    failed += r.pass ? 0 : 1;
    std::printf("%s  %-20s %s: %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", check.id.c_str(), r.name.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
  }
  if (run == 0) throw UsageError("--only matched no check");
  std::printf("%d/%d checks passed (seed %llu)\n", run - failed, run, static_cast<unsigned long long>(a.c.seed));
  return failed ? kVerify : kOk;
}

// ------------------------------------------------------------------ synth-ratings

struct SynthArgs {
  Common c;
  int trials = 50;
  double sigma = 0.0;
};

int cmd_synth(const SynthArgs& a) {
  if (a.c.out.empty()) throw UsageError("synth-ratings needs --out FILE");
  const auto cfg = config_or_default(a.c.config);
  write_ratings_csv(a.c.out, make_synthetic_ratings(cfg.qoe, a.trials, a.sigma, a.c.seed));
  return kOk;
}

void add_common(CLI::App* app, Common& c, bool scenarios = true) {
  app->add_option("--config", c.config, "key = value configuration file");
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--out", c.out, "output directory");
  if (scenarios) app->add_option("--scenarios", c.scenarios, "comma-separated scenario ids")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent bitrate selection on a simulated shared link"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ASMS_VERSION));

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train fmappo or ippo agents");
  add_common(train_cmd, ta.c);
  train_cmd->add_option("--method", ta.method, "fmappo | ippo")->capture_default_str();
  train_cmd->add_option("--episodes", ta.episodes, "override the configured episode count");
  train_cmd->add_flag("--quiet", ta.quiet, "no progress lines");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or a rule-based controller");
  add_common(eval_cmd, ea.c);
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "run directory or checkpoint directory");
  eval_cmd->add_option("--method", ea.method, "delay-gradient | bandwidth-probe | random");
  eval_cmd->add_option("--name", ea.name, "method label in the summary");
  eval_cmd->add_option("--episodes", ea.episodes, "episodes per scenario");
  eval_cmd->add_flag("--trace", ea.trace, "also write trace.csv");

  CompareArgs ca;
  auto* cmp_cmd = app.add_subcommand("compare", "tabulate and plot evaluation summaries");
  add_common(cmp_cmd, ca.c);
  cmp_cmd->add_option("sources", ca.sources, "[label=]eval dir or CSV (method, scenario, qoe_mean, qoe_std)")
      ->required();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit-qoe", "grid-search QoE weights against MOS ratings");
  add_common(fit_cmd, fa.c, false);
  fit_cmd->add_option("--ratings", fa.ratings, "ratings CSV")->required();
  fit_cmd->add_option("--grid", fa.grid, "grid file (axis = v1, v2, ...)");

  VerifyArgs va;
  auto* ver_cmd = app.add_subcommand("verify", "run the self-check suite");
  add_common(ver_cmd, va.c, false);
  ver_cmd->add_option("--only", va.only, "check ids to run")->delimiter(',');
  ver_cmd->add_flag("--inject-gradient-fault", va.inject_fault, "corrupt one backward path (negative control)")
      ->group("");

  SynthArgs sa;
  auto* syn_cmd = app.add_subcommand("synth-ratings", "write synthetic ratings from the configured weights");
  syn_cmd->group("");
  add_common(syn_cmd, sa.c, false);
  syn_cmd->add_option("--trials", sa.trials, "records per scenario")->capture_default_str();
  syn_cmd->add_option("--sigma", sa.sigma, "MOS noise standard deviation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(ta);
    if (*eval_cmd) return cmd_eval(ea);
    if (*cmp_cmd) return cmd_compare(ca);
    if (*fit_cmd) return cmd_fit_qoe(fa);
    if (*ver_cmd) return cmd_verify(va);
    if (*syn_cmd) return cmd_synth(sa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
