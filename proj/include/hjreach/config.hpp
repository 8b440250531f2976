#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hjreach/trainer.hpp"

namespace hjreach {

using KeyValues = std::map<std::string, std::string>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

}  // namespace detail

// Flat `key = value` text; '#' starts a comment, blank lines are skipped.
inline KeyValues parse_config_text(std::istream& is) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

inline KeyValues load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config_text(is);
}

// `--set key=value` override
inline void apply_override(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key=value");
  kv[detail::trim(assignment.substr(0, eq))] =
      detail::trim(assignment.substr(eq + 1));
}

inline const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "system",          "schedule",         "preset",
      "hidden_width",    "omega0",           "seed",
      "batch_size",      "pretrain_iters",   "curriculum_iters",
      "learning_rate",   "terminal_weight",  "terminal_fraction",
      "horizon",         "checkpoint_interval", "log_interval",
      "v_e",             "v_p",              "omega_max",
      "collision_radius", "game_convention"};
  return keys;
}

// Builds a TrainConfig from key-value text. `preset` (desk|paper) is applied
// first, then explicit keys override it. Unknown keys are rejected with the
// full list of valid keys. `extra_keys` lets callers (the sweep recipe)
// whitelist additional keys they consume themselves.
inline TrainConfig make_train_config(
    const KeyValues& kv, const std::vector<std::string>& extra_keys = {}) {
  const auto& known = train_config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    if (std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end())
      continue;
    std::string msg = "unknown config key '" + key + "'; valid keys:";
    for (const auto& k : known) msg += " " + k;
    for (const auto& k : extra_keys) msg += " " + k;
    throw ConfigError(msg);
  }

  TrainConfig cfg;
  const std::string system =
      kv.count("system") ? kv.at("system") : cfg.system;
  if (kv.count("preset")) {
    const std::string& p = kv.at("preset");
    if (p == "desk")
      cfg = desk_preset(system);
    else if (p == "paper")
      cfg = paper_preset(system);
    else
      throw ConfigError("preset must be 'desk' or 'paper', got '" + p + "'");
  }
  cfg.system = system;

  const auto get = [&](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("schedule")) cfg.schedule = *v;
  if (const auto* v = get("hidden_width"))
    cfg.hidden_width = static_cast<int>(detail::to_long("hidden_width", *v));
  if (const auto* v = get("omega0")) cfg.omega0 = detail::to_double("omega0", *v);
  if (const auto* v = get("seed"))
    cfg.seed = static_cast<std::uint64_t>(detail::to_long("seed", *v));
  if (const auto* v = get("batch_size"))
    cfg.batch_size = static_cast<int>(detail::to_long("batch_size", *v));
  if (const auto* v = get("pretrain_iters"))
    cfg.pretrain_iters = detail::to_long("pretrain_iters", *v);
  if (const auto* v = get("curriculum_iters"))
    cfg.curriculum_iters = detail::to_long("curriculum_iters", *v);
  if (const auto* v = get("learning_rate"))
    cfg.learning_rate = detail::to_double("learning_rate", *v);
  if (const auto* v = get("terminal_weight"))
    cfg.terminal_weight = detail::to_double("terminal_weight", *v);
  if (const auto* v = get("terminal_fraction"))
    cfg.terminal_fraction = detail::to_double("terminal_fraction", *v);
  if (const auto* v = get("horizon")) cfg.horizon = detail::to_double("horizon", *v);
  if (const auto* v = get("checkpoint_interval"))
    cfg.checkpoint_interval = detail::to_long("checkpoint_interval", *v);
  if (const auto* v = get("log_interval"))
    cfg.log_interval = detail::to_long("log_interval", *v);
  if (const auto* v = get("v_e")) cfg.overrides.v_e = detail::to_double("v_e", *v);
  if (const auto* v = get("v_p")) cfg.overrides.v_p = detail::to_double("v_p", *v);
  if (const auto* v = get("omega_max"))
    cfg.overrides.omega_max = detail::to_double("omega_max", *v);
  if (const auto* v = get("collision_radius"))
    cfg.overrides.collision_radius = detail::to_double("collision_radius", *v);
  if (const auto* v = get("game_convention")) {
    if (*v == "avoid")
      cfg.overrides.convention = GameConvention::kAvoid;
    else if (*v == "reach")
      cfg.overrides.convention = GameConvention::kReach;
    else
      throw ConfigError("game_convention must be 'avoid' or 'reach'");
  }
  cfg.validate();
  return cfg;
}

// Deterministic echo of a resolved config (sorted keys, full precision).
inline KeyValues render_train_config(const TrainConfig& cfg) {
  const auto num = [](double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return std::string(buf);
  };
  KeyValues kv;
  kv["system"] = cfg.system;
  kv["schedule"] = cfg.schedule;
  kv["hidden_width"] = std::to_string(cfg.hidden_width);
  kv["omega0"] = num(cfg.omega0);
  kv["seed"] = std::to_string(cfg.seed);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["pretrain_iters"] = std::to_string(cfg.pretrain_iters);
  kv["curriculum_iters"] = std::to_string(cfg.curriculum_iters);
  kv["learning_rate"] = num(cfg.learning_rate);
  kv["terminal_weight"] = num(cfg.terminal_weight);
  kv["terminal_fraction"] = num(cfg.terminal_fraction);
  kv["horizon"] = num(cfg.horizon);
  kv["checkpoint_interval"] = std::to_string(cfg.checkpoint_interval);
  kv["log_interval"] = std::to_string(cfg.log_interval);
  if (cfg.overrides.v_e) kv["v_e"] = num(*cfg.overrides.v_e);
  if (cfg.overrides.v_p) kv["v_p"] = num(*cfg.overrides.v_p);
  if (cfg.overrides.omega_max) kv["omega_max"] = num(*cfg.overrides.omega_max);
  if (cfg.overrides.collision_radius)
    kv["collision_radius"] = num(*cfg.overrides.collision_radius);
  if (cfg.overrides.convention)
    kv["game_convention"] =
        *cfg.overrides.convention == GameConvention::kAvoid ? "avoid" : "reach";
  return kv;
}

inline void save_config_file(const std::filesystem::path& path,
                             const KeyValues& kv) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot open '" + path.string() + "'");
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
}

}  // namespace hjreach
