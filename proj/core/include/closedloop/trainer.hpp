#pragma once

#include <span>
#include <string>
#include <vector>

#include "closedloop/config.hpp"
#include "closedloop/optimizer.hpp"
#include "closedloop/ppo.hpp"
#include "closedloop/simulator.hpp"

namespace closedloop {

struct TrainerState {
  ParameterSet policy;
  ParameterSet value;
  AdamWState policy_opt;
  AdamWState value_opt;
  /// Completed epochs.
  int epoch = 0;
};

/// Fresh networks initialized from `rng`.
TrainerState make_trainer_state(const RunConfig& cfg, Rng& rng);

struct EpochReport {
  int epoch = 0;
  TrainMode mode = TrainMode::rtr;
  double learning_rate = 0.0;
  int updates = 0;
  int skipped_updates = 0;
  /// Means per scenario (imitation) or per sample (PPO); nan when unused.
  double il_loss = 0.0;
  double bc_loss = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  double mean_return = 0.0;
  double collision_pct = 0.0;
  double offroad_pct = 0.0;
  double wall_seconds = 0.0;
};

inline constexpr const char* kEpochReportHeader =
    "epoch,mode,il_loss,bc_loss,surrogate,value_loss,mean_return,collision_pct,offroad_pct,learning_rate,updates,"
    "skipped_updates,wall_seconds";
std::string format_epoch_row(const EpochReport& r);

/// Throws ConfigError when the datasets cannot serve the mode (e.g. imitation
/// without nominal scenarios).
void check_training_data(const TrainConfig& cfg, std::span<const ScenarioSpec> nominal,
                         std::span<const ScenarioSpec> longtail);

/// Factorized PPO samples of one RL rollout: one per learner agent and tick,
/// with GAE advantages and value targets A + V. The bootstrap value is 0
/// when the rollout terminated and V(s_T) otherwise.
std::vector<PpoSample> build_ppo_samples(const Trajectory& traj, double gamma, double gae_lambda);

/// Gradient of one combined update: lambda_rl * g_RL + g_IL (or g_BC).
struct UpdateGradient {
  std::vector<double> policy;
  std::vector<double> value;
  double il_loss = 0.0;
  double bc_loss = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  int imitation_count = 0;
  int rl_count = 0;
};

/// RL samples drawn from `rl_rollouts` rollouts contribute the PPO gradient
/// summed over samples and averaged over rollouts; imitation scenarios their
/// mean il_loss (or bc_loss) gradient, according to the mode. The value
/// gradient is averaged over samples.
UpdateGradient update_gradient(const RunConfig& cfg, const TrainerState& state, std::span<const PpoSample> rl,
                               int rl_rollouts, std::span<const ScenarioSpec* const> imitation, Rng& rng);

/// RL rollouts of the given scenarios with the current networks.
std::vector<Trajectory> collect_rl_rollouts(const RunConfig& cfg, const TrainerState& state,
                                            std::span<const ScenarioSpec* const> specs, std::uint64_t seed);

/// One epoch of closed-loop training (Algorithm 1 and its baseline modes).
EpochReport train_epoch(const RunConfig& cfg, std::span<const ScenarioSpec> nominal,
                        std::span<const ScenarioSpec> longtail, TrainerState& state, Rng& rng);

Checkpoint make_checkpoint(const RunConfig& cfg, const TrainerState& state);

}  // namespace closedloop
