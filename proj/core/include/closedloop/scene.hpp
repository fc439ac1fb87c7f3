#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/features.hpp"
#include "closedloop/geometry.hpp"
#include "closedloop/lane_graph.hpp"

namespace closedloop {

enum class ScenarioFamily { cut_in, hard_brake, merge };
enum class TriggerKind { distance, time_to_collision };

std::string to_string(ScenarioFamily f);
ScenarioFamily family_from_string(const std::string& s);
std::string to_string(TriggerKind k);
TriggerKind trigger_from_string(const std::string& s);

/// Concrete parameters of one scripted hero.
struct HeroParams {
  ScenarioFamily family = ScenarioFamily::hard_brake;
  TriggerKind trigger = TriggerKind::distance;
  double trigger_distance = 15.0;  // m, bumper-to-bumper
  double trigger_ttc = 3.0;        // s
  double aggressiveness = 0.5;     // [0, 1]
  double cruise_speed = 20.0;      // m/s
  int target_agent = 0;
  /// Lane the hero moves into after triggering (cut-in and merge), -1 otherwise.
  int target_lane = -1;
};

struct AgentSlot {
  /// history[0] is the current state, history[h] the state h ticks ago.
  std::vector<KinematicState> history;
  bool hero = false;
  std::optional<HeroParams> hero_params;
  bool hero_triggered = false;
  bool alive = true;
  bool infracted = false;

  const KinematicState& state() const { return history.front(); }
};

/// Joint state of all agents plus the map at one tick.
struct SceneState {
  std::shared_ptr<const LaneGraph> map;
  std::vector<AgentSlot> agents;
  int tick = 0;
  int history_length = 10;

  int agent_count() const { return static_cast<int>(agents.size()); }
  std::vector<KinematicState> current_states() const;
  SceneWindow<double> window() const;
};

/// Footprint of a vehicle whose rear axle sits at (x, y): the box is centered
/// half a wheelbase ahead of the rear axle.
OrientedBox vehicle_box(const KinematicState& s);
Vec2 box_center(const KinematicState& s);

struct LeadInfo {
  int agent = -1;
  /// Bumper-to-bumper gap along the lane.
  double gap = 0.0;
  /// Along-lane distance between box centers.
  double center_distance = 0.0;
  double speed = 0.0;
};

/// Closest agent ahead in the same lane within `range` meters (center to
/// center, along the lane).
std::optional<LeadInfo> find_lead(const LaneGraph& map, std::span<const KinematicState> states,
                                  std::span<const std::uint8_t> alive, int agent, double range = 100.0);

}  // namespace closedloop
