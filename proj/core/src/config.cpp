#include "closedloop/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "closedloop/error.hpp"
#include "closedloop/file_util.hpp"

namespace closedloop {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::bc:
      return "BC";
    case TrainMode::il:
      return "IL";
    case TrainMode::rl:
      return "RL";
    case TrainMode::rl_shaped:
      return "RL_SHAPED";
    case TrainMode::bc_rl:
      return "BC_RL";
    case TrainMode::rtr:
      return "RTR";
  }
  return "unknown";
}

TrainMode train_mode_from_string(const std::string& s) {
  for (TrainMode m : {TrainMode::bc, TrainMode::il, TrainMode::rl, TrainMode::rl_shaped, TrainMode::bc_rl,
                      TrainMode::rtr}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown training mode '" + s + "' (expected BC, IL, RL, RL_SHAPED, BC_RL or RTR)");
}

bool mode_uses_rl(TrainMode m) {
  return m == TrainMode::rl || m == TrainMode::rl_shaped || m == TrainMode::bc_rl || m == TrainMode::rtr;
}
bool mode_uses_il(TrainMode m) { return m == TrainMode::il || m == TrainMode::rtr; }
bool mode_uses_bc(TrainMode m) { return m == TrainMode::bc || m == TrainMode::bc_rl; }

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid training configuration: ") + what);
  };
  require(lambda_rl >= 0.0, "lambda_rl must be >= 0");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip_eps > 0.0 && clip_eps < 1.0, "clip_eps must lie in (0, 1)");
  require(il_minibatch >= 1 && ppo_batch >= 1 && ppo_minibatch >= 1 && ppo_epochs >= 1 && total_epochs >= 1,
          "batch sizes and epoch counts must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(grad_clip_norm > 0.0, "grad_clip_norm must be positive");
  require(lr_decay_factor > 0.0 && lr_decay_every_epochs >= 1, "invalid learning-rate schedule");
  require(huber_delta > 0.0, "huber_delta must be positive");
  require(rollout_T >= 1 && rl_horizon >= 1, "horizons must be >= 1");
  require(iterations_per_epoch >= 0, "iterations_per_epoch must be >= 0");
}

void DataConfig::validate() const {
  if (nominal_train < 0 || nominal_heldout < 0 || longtail_train < 0 || longtail_heldout < 0 || longtail_ood < 0) {
    throw ConfigError("dataset sizes must be >= 0");
  }
  if (train_families.empty()) throw ConfigError("at least one training scenario family is required");
  if (nominal_ticks < 1) throw ConfigError("nominal_ticks must be >= 1");
}

void EvalConfig::validate() const {
  if (longtail_horizon < 1) throw ConfigError("eval longtail_horizon must be >= 1");
  if (!(fde_horizon_s > 0.0)) throw ConfigError("fde_horizon_s must be positive");
  if (bootstrap_resamples < 100) throw ConfigError("bootstrap_resamples must be >= 100");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci_level must lie in (0, 1)");
}

void RunConfig::validate() const {
  train.validate();
  data.validate();
  features.validate();
  eval.validate();
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(bounds.max_accel > 0.0) || !(bounds.max_steer > 0.0) || bounds.max_steer >= 1.5) {
    throw ConfigError("invalid action bounds");
  }
  if (network.hidden.empty()) throw ConfigError("network needs at least one hidden layer");
  if (train.rollout_T > data.nominal_ticks) throw ConfigError("rollout_T exceeds the nominal log length");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

namespace {

std::string fmt_double(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config key " + key + ": bad number '" + v + "'");
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config key " + key + ": bad integer '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config key " + key + ": bad seed '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key " + key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class M>
Field dbl(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return fmt_double(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, const std::string& v) { member(c) = parse_double(key, v); }};
}

template <class M>
Field integer(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [member, key](RunConfig& c, const std::string& v) {
            member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_int(key, v));
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"mode", [](const RunConfig& c) { return to_string(c.train.mode); },
                 [](RunConfig& c, const std::string& v) { c.train.mode = train_mode_from_string(v); }});
    f.push_back(dbl("lambda_rl", [](RunConfig& c) -> double& { return c.train.lambda_rl; }));
    f.push_back(dbl("alpha", [](RunConfig& c) -> double& { return c.train.alpha; }));
    f.push_back(dbl("gamma", [](RunConfig& c) -> double& { return c.train.gamma; }));
    f.push_back(dbl("gae_lambda", [](RunConfig& c) -> double& { return c.train.gae_lambda; }));
    f.push_back(dbl("clip_eps", [](RunConfig& c) -> double& { return c.train.clip_eps; }));
    f.push_back(integer("il_minibatch", [](RunConfig& c) -> int& { return c.train.il_minibatch; }));
    f.push_back(integer("ppo_batch", [](RunConfig& c) -> int& { return c.train.ppo_batch; }));
    f.push_back(integer("ppo_minibatch", [](RunConfig& c) -> int& { return c.train.ppo_minibatch; }));
    f.push_back(integer("ppo_epochs", [](RunConfig& c) -> int& { return c.train.ppo_epochs; }));
    f.push_back(dbl("learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; }));
    f.push_back(dbl("weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; }));
    f.push_back(dbl("grad_clip_norm", [](RunConfig& c) -> double& { return c.train.grad_clip_norm; }));
    f.push_back(integer("total_epochs", [](RunConfig& c) -> int& { return c.train.total_epochs; }));
    f.push_back(dbl("lr_decay_factor", [](RunConfig& c) -> double& { return c.train.lr_decay_factor; }));
    f.push_back(integer("lr_decay_every_epochs", [](RunConfig& c) -> int& { return c.train.lr_decay_every_epochs; }));
    f.push_back(dbl("huber_delta", [](RunConfig& c) -> double& { return c.train.huber_delta; }));
    f.push_back(integer("rollout_T", [](RunConfig& c) -> int& { return c.train.rollout_T; }));
    f.push_back(integer("rl_horizon", [](RunConfig& c) -> int& { return c.train.rl_horizon; }));
    f.push_back(integer("iterations_per_epoch", [](RunConfig& c) -> int& { return c.train.iterations_per_epoch; }));
    f.push_back({"il_sample_mode",
                 [](const RunConfig& c) { return c.train.il_sample_mode == SampleMode::mean ? "mean" : "reparameterized"; },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "mean") {
                     c.train.il_sample_mode = SampleMode::mean;
                   } else if (v == "reparameterized") {
                     c.train.il_sample_mode = SampleMode::reparameterized;
                   } else {
                     throw ConfigError("config key il_sample_mode: expected mean or reparameterized");
                   }
                 }});
    f.push_back({"normalize_advantages",
                 [](const RunConfig& c) { return c.train.normalize_advantages ? "true" : "false"; },
                 [](RunConfig& c, const std::string& v) {
                   c.train.normalize_advantages = parse_bool("normalize_advantages", v);
                 }});
    f.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.train.seed); },
                 [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64("seed", v); }});

    f.push_back(integer("nominal_train", [](RunConfig& c) -> int& { return c.data.nominal_train; }));
    f.push_back(integer("nominal_heldout", [](RunConfig& c) -> int& { return c.data.nominal_heldout; }));
    f.push_back(integer("longtail_train", [](RunConfig& c) -> int& { return c.data.longtail_train; }));
    f.push_back(integer("longtail_heldout", [](RunConfig& c) -> int& { return c.data.longtail_heldout; }));
    f.push_back(integer("longtail_ood", [](RunConfig& c) -> int& { return c.data.longtail_ood; }));
    f.push_back({"train_families",
                 [](const RunConfig& c) {
                   std::string s;
                   for (ScenarioFamily fam : c.data.train_families) s += (s.empty() ? "" : ",") + to_string(fam);
                   return s;
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.data.train_families.clear();
                   try {
                     for (const auto& name : split_list(v)) c.data.train_families.push_back(family_from_string(name));
                   } catch (const ScenarioError& e) {
                     throw ConfigError(std::string("config key train_families: ") + e.what());
                   }
                 }});
    f.push_back({"ood_family", [](const RunConfig& c) { return to_string(c.data.ood_family); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.data.ood_family = family_from_string(v);
                   } catch (const ScenarioError& e) {
                     throw ConfigError(std::string("config key ood_family: ") + e.what());
                   }
                 }});
    f.push_back({"trigger", [](const RunConfig& c) { return to_string(c.data.trigger); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.data.trigger = trigger_from_string(v);
                   } catch (const ScenarioError& e) {
                     throw ConfigError(std::string("config key trigger: ") + e.what());
                   }
                 }});
    f.push_back(integer("nominal_ticks", [](RunConfig& c) -> int& { return c.data.nominal_ticks; }));

    f.push_back(integer("history", [](RunConfig& c) -> int& { return c.features.history; }));
    f.push_back(integer("neighbors", [](RunConfig& c) -> int& { return c.features.neighbors; }));
    f.push_back(dbl("neighbor_radius", [](RunConfig& c) -> double& { return c.features.neighbor_radius; }));
    f.push_back(dbl("hero_radius", [](RunConfig& c) -> double& { return c.features.hero_radius; }));
    f.push_back(dbl("lead_half_width", [](RunConfig& c) -> double& { return c.features.lead_half_width; }));

    f.push_back({"hidden",
                 [](const RunConfig& c) {
                   std::string s;
                   for (int h : c.network.hidden) s += (s.empty() ? "" : ",") + std::to_string(h);
                   return s;
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.network.hidden.clear();
                   for (const auto& item : split_list(v)) {
                     const long long h = parse_int("hidden", item);
                     if (h < 1) throw ConfigError("config key hidden: widths must be positive");
                     c.network.hidden.push_back(static_cast<int>(h));
                   }
                 }});
    f.push_back(dbl("init_sigma_accel", [](RunConfig& c) -> double& { return c.network.init_sigma_accel; }));
    f.push_back(dbl("init_sigma_steer", [](RunConfig& c) -> double& { return c.network.init_sigma_steer; }));
    f.push_back(dbl("output_init_scale", [](RunConfig& c) -> double& { return c.network.output_init_scale; }));

    f.push_back(dbl("max_accel", [](RunConfig& c) -> double& { return c.bounds.max_accel; }));
    f.push_back(dbl("max_steer", [](RunConfig& c) -> double& { return c.bounds.max_steer; }));
    f.push_back(dbl("dt", [](RunConfig& c) -> double& { return c.dt; }));

    f.push_back(dbl("idm_max_accel", [](RunConfig& c) -> double& { return c.oracle.max_accel; }));
    f.push_back(dbl("idm_comfortable_decel", [](RunConfig& c) -> double& { return c.oracle.comfortable_decel; }));
    f.push_back(dbl("idm_min_gap", [](RunConfig& c) -> double& { return c.oracle.min_gap; }));
    f.push_back(dbl("idm_headway", [](RunConfig& c) -> double& { return c.oracle.headway; }));

    f.push_back(integer("eval_longtail_horizon", [](RunConfig& c) -> int& { return c.eval.longtail_horizon; }));
    f.push_back(dbl("fde_horizon_s", [](RunConfig& c) -> double& { return c.eval.fde_horizon_s; }));
    f.push_back(integer("bootstrap_resamples", [](RunConfig& c) -> int& { return c.eval.bootstrap_resamples; }));
    f.push_back(dbl("ci_level", [](RunConfig& c) -> double& { return c.eval.ci_level; }));
    return f;
  }();
  return table;
}

}  // namespace

void apply_key_values(const std::map<std::string, std::string>& kv, RunConfig& cfg) {
  const auto version = kv.find("config_version");
  if (version == kv.end()) throw ConfigError("config is missing config_version");
  if (parse_int("config_version", version->second) != kConfigVersion) {
    throw ConfigError("config_version " + version->second + " is not supported (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  for (const auto& [key, value] : kv) {
    if (key == "config_version") continue;
    bool found = false;
    for (const Field& f : fields()) {
      if (f.key == key) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  cfg.validate();
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  apply_key_values(parse_key_values(text), cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_run_config(text);
}

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("config_version", std::to_string(kConfigVersion));
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

std::string format_run_config(const RunConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : to_key_values(cfg)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace closedloop
