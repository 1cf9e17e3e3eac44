#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "asms/core.hpp"
#include "asms/error.hpp"

namespace asms {

struct RunConfig {
  SimConfig sim;
  HyperParams hp;
  QoECoefficients qoe;

  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + std::string(s) + "'");
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<double> parse_doubles(std::string_view s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_double(item));
  return out;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

inline Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("expected tanh or relu");
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field double_field(std::string key, T RunConfig::*group, double T::*member) {
  return {std::move(key),
          [=](RunConfig& c, std::string_view v) { (c.*group).*member = parse_double(v); },
          [=](const RunConfig& c) { return format_double((c.*group).*member); }};
}

template <typename T>
Field int_field(std::string key, T RunConfig::*group, int T::*member) {
  return {std::move(key),
          [=](RunConfig& c, std::string_view v) { (c.*group).*member = parse_int(v); },
          [=](const RunConfig& c) { return std::to_string((c.*group).*member); }};
}

template <typename T>
Field bool_field(std::string key, T RunConfig::*group, bool T::*member) {
  return {std::move(key),
          [=](RunConfig& c, std::string_view v) { (c.*group).*member = parse_bool(v); },
          [=](const RunConfig& c) { return std::string((c.*group).*member ? "true" : "false"); }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using R = RunConfig;
    std::vector<Field> f;
    // HyperParams
    f.push_back(double_field("gamma_discount", &R::hp, &HyperParams::gamma_discount));
    f.push_back(double_field("gae_lambda", &R::hp, &HyperParams::gae_lambda));
    f.push_back(double_field("clip_eps", &R::hp, &HyperParams::clip_eps));
    f.push_back(int_field("minibatch", &R::hp, &HyperParams::minibatch));
    f.push_back(double_field("lr", &R::hp, &HyperParams::lr));
    f.push_back(int_field("epochs", &R::hp, &HyperParams::epochs));
    f.push_back(double_field("grad_clip", &R::hp, &HyperParams::grad_clip));
    f.push_back(int_field("policy_update_freq", &R::hp, &HyperParams::policy_update_freq));
    f.push_back(int_field("fedavg_freq", &R::hp, &HyperParams::fedavg_freq));
    f.push_back(int_field("hidden_width", &R::hp, &HyperParams::hidden_width));
    f.push_back(int_field("episode_len", &R::hp, &HyperParams::episode_len));
    f.push_back(int_field("episodes", &R::hp, &HyperParams::episodes));
    f.push_back(double_field("ldp_eps", &R::hp, &HyperParams::ldp_eps));
    f.push_back(double_field("ldp_clip", &R::hp, &HyperParams::ldp_clip));
    f.push_back(bool_field("ldp_enabled", &R::hp, &HyperParams::ldp_enabled));
    f.push_back(double_field("entropy_coef", &R::hp, &HyperParams::entropy_coef));
    f.push_back(bool_field("whiten_advantages", &R::hp, &HyperParams::whiten_advantages));
    f.push_back({"actor_activation",
                 [](R& c, std::string_view v) { c.hp.actor_activation = parse_activation(v); },
                 [](const R& c) { return std::string(to_string(c.hp.actor_activation)); }});
    f.push_back({"critic_activation",
                 [](R& c, std::string_view v) { c.hp.critic_activation = parse_activation(v); },
                 [](const R& c) { return std::string(to_string(c.hp.critic_activation)); }});
    f.push_back({"optimizer",
                 [](R& c, std::string_view v) {
                   if (v != "adam") throw std::invalid_argument("only adam is supported");
                   c.hp.optimizer = std::string(v);
                 },
                 [](const R& c) { return c.hp.optimizer; }});
    f.push_back(double_field("entropy_temperature", &R::hp, &HyperParams::entropy_temperature));
    f.push_back(int_field("replay_buffer_size", &R::hp, &HyperParams::replay_buffer_size));
    f.push_back(double_field("target_update_coef", &R::hp, &HyperParams::target_update_coef));
    f.push_back(int_field("sac_critics", &R::hp, &HyperParams::sac_critics));
    // QoECoefficients
    f.push_back(double_field("alpha", &R::qoe, &QoECoefficients::alpha));
    f.push_back(double_field("beta", &R::qoe, &QoECoefficients::beta));
    f.push_back(double_field("gamma", &R::qoe, &QoECoefficients::gamma));
    f.push_back(double_field("delta1", &R::qoe, &QoECoefficients::delta1));
    f.push_back(double_field("delta2", &R::qoe, &QoECoefficients::delta2));
    f.push_back(double_field("y_min", &R::qoe, &QoECoefficients::y_min));
    f.push_back(double_field("f_target", &R::qoe, &QoECoefficients::f_target));
    f.push_back(double_field("u_max", &R::qoe, &QoECoefficients::u_max));
    f.push_back(double_field("p_threshold", &R::qoe, &QoECoefficients::p_threshold));
    f.push_back(double_field("eps_small", &R::qoe, &QoECoefficients::eps_small));
    // SimConfig
    f.push_back(int_field("agents", &R::sim, &SimConfig::agents));
    f.push_back(double_field("initial_bitrate", &R::sim, &SimConfig::initial_bitrate));
    f.push_back(double_field("y_max", &R::sim, &SimConfig::y_max));
    f.push_back(double_field("packet_size", &R::sim, &SimConfig::packet_size));
    f.push_back(double_field("latency_kappa", &R::sim, &SimConfig::latency_kappa));
    f.push_back(double_field("congestion_loss", &R::sim, &SimConfig::congestion_loss));
    f.push_back({"delta_table",
                 [](R& c, std::string_view v) {
                   auto d = parse_doubles(v);
                   if (!DeltaTable::is_valid(d)) {
                     throw std::invalid_argument("must be sorted, symmetric, one zero");
                   }
                   c.sim.delta_table = DeltaTable(std::move(d));
                 },
                 [](const R& c) { return join_doubles(c.sim.delta_table.values()); }});
    f.push_back({"user_schedule",
                 [](R& c, std::string_view v) { c.sim.user_schedule = parse_doubles(v); },
                 [](const R& c) { return join_doubles(c.sim.user_schedule); }});
    f.push_back({"reward_mode",
                 [](R& c, std::string_view v) {
                   if (v == "mean") c.sim.reward_mode = RewardMode::mean;
                   else if (v == "sum") c.sim.reward_mode = RewardMode::sum;
                   else throw std::invalid_argument("expected mean or sum");
                 },
                 [](const R& c) {
                   return std::string(c.sim.reward_mode == RewardMode::mean ? "mean" : "sum");
                 }});
    f.push_back({"scenarios",
                 [](R& c, std::string_view v) {
                   auto names = split(v, ',');
                   for (auto& n : names) {
                     auto s = find_scenario(n);
                     if (!s) throw std::invalid_argument("unknown scenario '" + n + "'");
                     n = s->name;
                   }
                   c.sim.scenarios = std::move(names);
                 },
                 [](const R& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.sim.scenarios.size(); ++i) {
                     if (i) out += ',';
                     out += c.sim.scenarios[i];
                   }
                   return out;
                 }});
    f.push_back(int_field("eval_episodes", &R::sim, &SimConfig::eval_episodes));
    f.push_back(int_field("checkpoint_every", &R::sim, &SimConfig::checkpoint_every));
    return f;
  }();
  return table;
}

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace config_detail

/// Checks every type invariant; throws ConfigError naming the offending key.
/// `lines` maps keys to their source line for diagnostics (0 when unknown).
inline void validate(const RunConfig& c,
                     const std::function<int(std::string_view)>& line_of = nullptr) {
  auto fail = [&](std::string_view key, const std::string& what) {
    throw ConfigError(std::string(key), line_of ? line_of(key) : 0, what);
  };
  const auto& hp = c.hp;
  if (!(hp.gamma_discount > 0 && hp.gamma_discount <= 1)) fail("gamma_discount", "must be in (0, 1]");
  if (!(hp.gae_lambda >= 0 && hp.gae_lambda <= 1)) fail("gae_lambda", "must be in [0, 1]");
  if (!(hp.clip_eps > 0 && hp.clip_eps < 1)) fail("clip_eps", "must be in (0, 1)");
  if (hp.minibatch < 1) fail("minibatch", "must be >= 1");
  if (!(hp.lr > 0)) fail("lr", "must be > 0");
  if (hp.epochs < 1) fail("epochs", "must be >= 1");
  if (!(hp.grad_clip > 0)) fail("grad_clip", "must be > 0");
  if (hp.episode_len < 1) fail("episode_len", "must be >= 1");
  if (hp.policy_update_freq < 1) fail("policy_update_freq", "must be >= 1");
  if (hp.episode_len % hp.policy_update_freq != 0 && hp.policy_update_freq % hp.episode_len != 0) {
    fail("policy_update_freq", "must divide or be a multiple of episode_len");
  }
  if (hp.fedavg_freq < 1) fail("fedavg_freq", "must be >= 1");
  if (hp.hidden_width < 1) fail("hidden_width", "must be >= 1");
  if (hp.episodes < 0) fail("episodes", "must be >= 0");
  if (!(hp.ldp_eps > 0)) fail("ldp_eps", "must be > 0");
  if (!(hp.ldp_clip > 0)) fail("ldp_clip", "must be > 0");
  if (!(hp.entropy_coef >= 0)) fail("entropy_coef", "must be >= 0");

  const auto& q = c.qoe;
  if (q.alpha < 0) fail("alpha", "must be >= 0");
  if (q.beta < 0) fail("beta", "must be >= 0");
  if (q.gamma < 0) fail("gamma", "must be >= 0");
  if (q.delta1 < 0) fail("delta1", "must be >= 0");
  if (q.delta2 < 0) fail("delta2", "must be >= 0");
  if (!(q.y_min > 0)) fail("y_min", "must be > 0");
  if (q.f_target < 0) fail("f_target", "must be >= 0");
  if (q.u_max < 1) fail("u_max", "must be >= 1");
  if (q.p_threshold < 0) fail("p_threshold", "must be >= 0");
  if (!(q.eps_small > 0)) fail("eps_small", "must be > 0");

  const auto& s = c.sim;
  if (s.agents < 1) fail("agents", "must be >= 1");
  if (!(s.y_max > q.y_min)) fail("y_max", "must exceed y_min");
  if (s.initial_bitrate < q.y_min || s.initial_bitrate > s.y_max) {
    fail("initial_bitrate", "must lie in [y_min, y_max]");
  }
  if (!(s.packet_size > 0)) fail("packet_size", "must be > 0");
  if (s.latency_kappa < 0) fail("latency_kappa", "must be >= 0");
  if (s.congestion_loss < 0) fail("congestion_loss", "must be >= 0");
  for (double u : s.user_schedule) {
    if (u < 0) fail("user_schedule", "user counts must be >= 0");
  }
  if (s.scenarios.empty()) fail("scenarios", "must list at least one scenario");
  if (s.eval_episodes < 1) fail("eval_episodes", "must be >= 1");
  if (s.checkpoint_every < 1) fail("checkpoint_every", "must be >= 1");
}

inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::vector<std::pair<std::string, int>> seen;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", line_no, "malformed line, expected 'key = value'");
    }
    const auto key = config_detail::trim(line.substr(0, eq));
    const auto value = config_detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "malformed line, empty key");
    const auto* field = config_detail::find_field(key);
    if (!field) throw ConfigError(std::string(key), line_no, "unknown key");
    try {
      field->set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError(std::string(key), line_no, e.what());
    }
    seen.emplace_back(std::string(key), line_no);
  }
  validate(cfg, [&](std::string_view key) {
    for (const auto& [k, l] : seen) {
      if (k == key) return l;
    }
    return 0;
  });
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.key(), e.line(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

/// Full key = value listing of every field, parseable by parse_config.
inline std::string serialize_config(const RunConfig& c) {
  std::string out;
  for (const auto& f : config_detail::fields()) {
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace asms
