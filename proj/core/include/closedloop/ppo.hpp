#pragma once

#include <span>
#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/network.hpp"

namespace closedloop {

/// sum_t gamma^t r_t.
double discounted_return(std::span<const double> rewards, double gamma);

/// Per-agent discounted return from the rollout start; rewards[agent][tick].
std::vector<double> compute_value_targets(const std::vector<std::vector<double>>& rewards, double gamma);

/// GAE for one agent. `values` has rewards.size() + 1 entries, the last one
/// being the bootstrap value (0 after a terminal infraction).
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                                double gae_lambda);

/// min(r A, clip(r, 1 - eps, 1 + eps) A).
double clipped_surrogate(double ratio, double advantage, double clip_eps);

/// One (scenario, agent, tick) entry of the factorized PPO batch.
struct PpoSample {
  std::vector<double> features;
  AgentAction action;  // raw sampled action
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

struct PpoResult {
  /// Sum over samples of the clipped surrogate (to be maximized).
  double surrogate = 0.0;
  /// Sum over samples of (V - target)^2.
  double value_loss = 0.0;
  /// Gradient of -surrogate w.r.t. the policy parameters (descent direction).
  std::vector<double> policy_gradient;
  std::vector<double> value_gradient;
  bool normalized = false;
  int clipped = 0;
};

/// Factorized PPO losses over a batch. When `normalize` is set, advantages
/// are standardized over the batch; a zero-variance batch of more than one
/// sample is used unnormalized.
PpoResult ppo_losses(std::span<const PpoSample> batch, const ParameterSet& policy, const ParameterSet& value,
                     double clip_eps, bool normalize = true);

}  // namespace closedloop
