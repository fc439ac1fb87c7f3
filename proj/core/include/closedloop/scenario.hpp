#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/lane_graph.hpp"
#include "closedloop/rng.hpp"
#include "closedloop/scene.hpp"

namespace closedloop {

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// A scenario family with parameter ranges; sampling it yields a concrete
/// scenario.
struct LogicalScenario {
  ScenarioFamily family = ScenarioFamily::hard_brake;
  TriggerKind trigger = TriggerKind::distance;
  ParamRange trigger_distance{8.0, 20.0};
  ParamRange trigger_ttc{1.5, 3.0};
  ParamRange aggressiveness{0.5, 1.0};
  ParamRange hero_speed{14.0, 20.0};
  ParamRange follower_speed{18.0, 24.0};
  ParamRange initial_gap{15.0, 30.0};
  /// Integer-valued; sampled uniformly over the integers it spans.
  ParamRange map_variant{0.0, 0.0};
  /// Integer-valued count of extra learner-controlled agents.
  ParamRange extra_agents{0.0, 2.0};
  int hero_count = 1;

  void validate() const;
};

/// Built-in families: cut-in, hard-brake and merge.
LogicalScenario default_logical_scenario(ScenarioFamily family);

/// Demonstration log. states has T + 1 entries, actions T, indexed [tick][agent].
struct ExpertTrajectory {
  double dt = kDefaultTickSeconds;
  std::vector<std::vector<KinematicState>> states;
  std::vector<std::vector<AgentAction>> actions;

  int ticks() const { return static_cast<int>(actions.size()); }
};

enum class ScenarioOrigin { nominal, long_tail };
std::string to_string(ScenarioOrigin o);
ScenarioOrigin origin_from_string(const std::string& s);

struct AgentInit {
  /// history[0] is the state at tick 0, history[h] the state h ticks earlier.
  std::vector<KinematicState> history;
  bool hero = false;
  std::optional<HeroParams> hero_params;
};

struct ScenarioSpec {
  std::string id;
  ScenarioOrigin origin = ScenarioOrigin::nominal;
  /// "nominal" or the long-tail family name.
  std::string family = "nominal";
  int map_variant = 0;
  std::shared_ptr<const LaneGraph> map;
  std::vector<AgentInit> agents;
  std::optional<ExpertTrajectory> expert_log;
  std::uint64_t seed = 0;

  int agent_count() const { return static_cast<int>(agents.size()); }
  int history_length() const { return agents.empty() ? 0 : static_cast<int>(agents.front().history.size()); }
};

/// Throws ScenarioError when the spec breaks a structural invariant: hero
/// flags vs params, log presence vs origin, overlapping or off-road initial
/// boxes, inconsistent history lengths.
void validate_scenario(const ScenarioSpec& spec);

SceneState initial_scene(const ScenarioSpec& spec);

/// Shared lane graphs for the built-in map variants.
std::shared_ptr<const LaneGraph> builtin_map(int variant);

struct OracleConfig {
  double max_accel = 1.5;       // a_max
  double comfortable_decel = 2.0;  // b
  double min_gap = 2.0;         // s0
  double headway = 1.5;         // T
  double exponent = 4.0;
  double lead_range = 100.0;
  /// Pure-pursuit lookahead as a multiple of distance travelled per tick.
  double lookahead_ticks = 2.5;
  double min_lookahead = 6.0;
};

/// Intelligent-driver-model longitudinal control toward the lane speed limit
/// plus pure-pursuit lane keeping, clipped to bounds.
AgentAction expert_oracle_action(int agent, const SceneState& scene, const OracleConfig& cfg,
                                 const ActionBounds& bounds, double dt = kDefaultTickSeconds);

/// IDM acceleration with an optional leader (gap <= 0 treated as contact).
double idm_acceleration(double v, double v_desired, std::optional<double> gap, double closing_speed,
                        const OracleConfig& cfg);

/// Steering that points the vehicle at the lane centerline point `lookahead`
/// meters ahead of its projection.
double pure_pursuit_steer(const KinematicState& s, const LaneGraph& map, int lane, double lookahead);

struct HeroDecision {
  AgentAction action;
  bool triggered = false;
};

/// Scripted hero behavior. Before the trigger fires the hero holds its cruise
/// speed in its lane; afterwards cut-in and merge heroes steer into the target
/// lane and hard-brake heroes decelerate at 2 + 4 * aggressiveness m/s^2.
HeroDecision hero_action(int hero_index, const SceneState& scene, const HeroParams& params, int tick,
                         const ActionBounds& bounds, double dt = kDefaultTickSeconds);

struct NominalConfig {
  ParamRange agents_per_lane{1.0, 3.0};
  ParamRange speed_offset{-4.0, 2.0};  // relative to the lane speed limit
  ParamRange lane_gap{18.0, 45.0};
  double lateral_noise = 0.3;
  double heading_noise = 0.02;
  int log_ticks = 10;
  int history = 10;
  double dt = kDefaultTickSeconds;
};

struct LongTailConfig {
  int history = 10;
  double dt = kDefaultTickSeconds;
};

inline constexpr int kGenerationRetryBudget = 100;

/// Demonstration snippet driven by the expert oracle. Deterministic in seed.
ScenarioSpec generate_nominal_scenario(const NominalConfig& cfg, int map_variant, std::uint64_t seed,
                                       const OracleConfig& oracle = {}, const ActionBounds& bounds = {});

/// Draws concrete hero parameters uniformly from the logical ranges and places
/// the agents; retries placement up to the budget.
ScenarioSpec sample_concrete_scenario(const LogicalScenario& logical, std::uint64_t seed,
                                      const LongTailConfig& cfg = {});

/// With probability alpha a uniform long-tail draw, otherwise a uniform
/// nominal draw.
const ScenarioSpec& sample_initial_state(double alpha, std::span<const ScenarioSpec> nominal,
                                         std::span<const ScenarioSpec> longtail, Rng& rng);

/// On-disk scenario set: versioned JSON with the maps it references.
struct ScenarioSet {
  std::vector<ScenarioSpec> scenarios;
};

inline constexpr int kScenarioSchemaVersion = 1;

void save_scenario_set(const std::filesystem::path& path, const ScenarioSet& set);
ScenarioSet load_scenario_set(const std::filesystem::path& path);

}  // namespace closedloop
