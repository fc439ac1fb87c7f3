#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/features.hpp"
#include "closedloop/policy.hpp"
#include "closedloop/scenario.hpp"

namespace closedloop {

enum class TrainMode { bc, il, rl, rl_shaped, bc_rl, rtr };
std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

bool mode_uses_rl(TrainMode m);
bool mode_uses_il(TrainMode m);
bool mode_uses_bc(TrainMode m);

/// Training hyperparameters. Defaults follow the paper's training table; the
/// RL weight and the initial-state mixture use the central ablation values.
struct TrainConfig {
  TrainMode mode = TrainMode::rtr;
  double lambda_rl = 5.0;
  double alpha = 0.5;
  double gamma = 0.79;
  double gae_lambda = 1.0;
  double clip_eps = 0.2;
  int il_minibatch = 32;
  int ppo_batch = 192;
  int ppo_minibatch = 32;
  int ppo_epochs = 1;
  double learning_rate = 1e-5;
  double weight_decay = 1e-4;
  double grad_clip_norm = 1.0;
  int total_epochs = 10;
  double lr_decay_factor = 0.2;
  int lr_decay_every_epochs = 3;
  double huber_delta = 1.0;
  /// Closed-loop imitation horizon in ticks (must not exceed the expert log).
  int rollout_T = 10;
  /// Horizon of RL rollouts in ticks.
  int rl_horizon = 20;
  /// Optimizer updates per epoch; 0 derives it from the dataset size.
  int iterations_per_epoch = 0;
  SampleMode il_sample_mode = SampleMode::mean;
  bool normalize_advantages = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DataConfig {
  int nominal_train = 50;
  int nominal_heldout = 15;
  int longtail_train = 20;
  int longtail_heldout = 20;
  int longtail_ood = 20;
  std::vector<ScenarioFamily> train_families{ScenarioFamily::cut_in, ScenarioFamily::hard_brake};
  ScenarioFamily ood_family = ScenarioFamily::merge;
  TriggerKind trigger = TriggerKind::distance;
  int nominal_ticks = 10;

  void validate() const;
};

struct EvalConfig {
  int longtail_horizon = 20;
  double fde_horizon_s = 5.0;
  int bootstrap_resamples = 1000;
  double ci_level = 0.95;

  void validate() const;
};

inline constexpr int kConfigVersion = 1;

/// Everything a command needs, loaded from one key = value file.
struct RunConfig {
  TrainConfig train;
  DataConfig data;
  FeatureConfig features;
  NetworkConfig network;
  ActionBounds bounds;
  OracleConfig oracle;
  EvalConfig eval;
  double dt = kDefaultTickSeconds;

  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Duplicate keys are an
/// error.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies the entries to `cfg`. Unknown keys and malformed values throw
/// ConfigError. The entries must include config_version matching
/// kConfigVersion.
void apply_key_values(const std::map<std::string, std::string>& kv, RunConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);

/// Every key with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg);
std::string format_run_config(const RunConfig& cfg);

}  // namespace closedloop
