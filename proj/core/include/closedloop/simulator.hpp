#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/features.hpp"
#include "closedloop/network.hpp"
#include "closedloop/policy.hpp"
#include "closedloop/rng.hpp"
#include "closedloop/scenario.hpp"
#include "closedloop/scene.hpp"

namespace closedloop {

enum class Infraction : std::uint8_t { none, collision, offroad };
std::string to_string(Infraction f);
Infraction infraction_from_string(const std::string& s);

/// Per-agent infraction at the given joint state. Collision takes precedence
/// over off-road; dead agents (alive[i] == 0) are skipped. An empty `alive`
/// means every agent is alive.
std::vector<Infraction> detect_infractions(const LaneGraph& map, std::span<const KinematicState> states,
                                           std::span<const std::uint8_t> alive);

struct StepOutcome {
  SceneState next;
  std::vector<double> rewards;
  std::vector<Infraction> infractions;
};

/// Advances every alive agent by one bicycle step and scores the result:
/// -1 for each agent's first infraction, 0 otherwise. Expects one action per
/// agent; actions of dead agents are ignored.
StepOutcome step_scene(const SceneState& scene, std::span<const AgentAction> joint_action,
                       double dt = kDefaultTickSeconds);

inline constexpr double kShapedRewardRange = 30.0;

struct ShapedReward {
  double bonus = 0.0;
  bool terminate = false;
};

/// Speed-tracking bonus 0.5 * (C - |v - limit|) / C with C = 30; terminate
/// once the deviation reaches C.
ShapedReward shaped_reward(const KinematicState& s, double speed_limit);

enum class ActionSource : std::uint8_t { learner, hero, oracle };
std::string to_string(ActionSource s);
ActionSource source_from_string(const std::string& s);

enum class RewardMode { sparse, shaped };

enum class LearnerKind { policy, oracle };

/// Who drives the non-hero agents. Heroes always follow their script.
struct PolicyMixture {
  LearnerKind learner = LearnerKind::policy;
  const ParameterSet* policy = nullptr;
  const ParameterSet* value = nullptr;
  FeatureConfig features;
  ActionBounds bounds;
  OracleConfig oracle;
};

struct RolloutOptions {
  int horizon = 10;
  SampleMode mode = SampleMode::mean;
  /// End the whole scenario at the first infraction (RL semantics).
  bool terminate_on_infraction = true;
  RewardMode reward = RewardMode::sparse;
  /// Keep per-agent features for every recorded state (including the last).
  bool record_features = false;
  /// Evaluate the value network on every recorded state.
  bool record_values = false;
  double dt = kDefaultTickSeconds;
};

enum class Termination : std::uint8_t { horizon, infraction, speed };

/// Recorded rollout, indexed [tick][agent]. states has ticks() + 1 rows.
struct Trajectory {
  std::string scenario_id;
  std::shared_ptr<const LaneGraph> map;
  double dt = kDefaultTickSeconds;
  std::vector<std::vector<KinematicState>> states;
  std::vector<std::vector<AgentAction>> actions;      // applied, after clipping
  std::vector<std::vector<AgentAction>> raw_actions;  // sampled, before clipping
  std::vector<std::vector<double>> rewards;
  /// Infraction observed in the state reached by each transition.
  std::vector<std::vector<Infraction>> infractions;
  std::vector<std::vector<double>> log_probs;  // learner agents only, 0 otherwise
  std::vector<std::vector<std::vector<double>>> features;
  std::vector<std::vector<double>> values;
  std::vector<ActionSource> sources;
  Termination termination = Termination::horizon;
  /// Tick of the terminal state when the rollout ended early.
  std::optional<int> termination_tick;

  int ticks() const { return static_cast<int>(actions.size()); }
  int agent_count() const { return sources.empty() ? 0 : static_cast<int>(sources.size()); }
  bool is_hero(int agent) const { return sources[static_cast<std::size_t>(agent)] == ActionSource::hero; }
};

/// Closed-loop rollout of the policy mixture from the scenario's initial
/// state. Deterministic in (spec, mixture, options, rng state).
Trajectory rollout(const PolicyMixture& mixture, const ScenarioSpec& spec, const RolloutOptions& options, Rng& rng);

/// The expert log of a nominal scenario as a trajectory with oracle sources.
Trajectory expert_trajectory(const ScenarioSpec& spec);

/// Features of every agent at a scene.
std::vector<std::vector<double>> scene_features(const SceneState& scene, const FeatureConfig& cfg);

}  // namespace closedloop
