#pragma once

#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/features.hpp"
#include "closedloop/network.hpp"
#include "closedloop/policy.hpp"
#include "closedloop/rng.hpp"
#include "closedloop/scenario.hpp"

namespace closedloop {

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// 0.5 e^2 for |e| <= delta, delta (|e| - delta / 2) beyond.
double huber(double e, double delta);

struct ImitationOptions {
  int horizon = 10;
  double huber_delta = 1.0;
  SampleMode mode = SampleMode::mean;
  FeatureConfig features;
  ActionBounds bounds;
  double dt = kDefaultTickSeconds;
};

/// Closed-loop imitation loss: the learner is unrolled from the expert's
/// initial state and every agent's position is compared with the expert log,
/// sum over ticks 1..horizon and agents of huber(|p - p_E|). The gradient is
/// obtained by backpropagation through the rollout (features, network and
/// bicycle dynamics). In reparameterized mode `rng` supplies the noise.
LossAndGradient il_loss(const ScenarioSpec& spec, const ParameterSet& policy, const ImitationOptions& options,
                        Rng* rng = nullptr);

/// Negative log-likelihood of the logged expert actions at the logged states,
/// averaged over (tick, agent).
LossAndGradient bc_loss(const ScenarioSpec& spec, const ParameterSet& policy, const FeatureConfig& features);

/// Expert-state windows of a nominal scenario: element t holds the joint
/// history ending at tick t of the log.
std::vector<SceneWindow<double>> expert_windows(const ScenarioSpec& spec);

}  // namespace closedloop
