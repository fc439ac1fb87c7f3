#include "closedloop/scene.hpp"

#include <cmath>

#include "closedloop/error.hpp"

namespace closedloop {

std::string to_string(ScenarioFamily f) {
  switch (f) {
    case ScenarioFamily::cut_in:
      return "cut_in";
    case ScenarioFamily::hard_brake:
      return "hard_brake";
    case ScenarioFamily::merge:
      return "merge";
  }
  return "unknown";
}

ScenarioFamily family_from_string(const std::string& s) {
  if (s == "cut_in") return ScenarioFamily::cut_in;
  if (s == "hard_brake") return ScenarioFamily::hard_brake;
  if (s == "merge") return ScenarioFamily::merge;
  throw ScenarioError("unknown scenario family '" + s + "'");
}

std::string to_string(TriggerKind k) { return k == TriggerKind::distance ? "distance" : "ttc"; }

TriggerKind trigger_from_string(const std::string& s) {
  if (s == "distance") return TriggerKind::distance;
  if (s == "ttc") return TriggerKind::time_to_collision;
  throw ScenarioError("unknown trigger kind '" + s + "'");
}

std::vector<KinematicState> SceneState::current_states() const {
  std::vector<KinematicState> out;
  out.reserve(agents.size());
  for (const AgentSlot& a : agents) out.push_back(a.state());
  return out;
}

SceneWindow<double> SceneState::window() const {
  SceneWindow<double> w(agent_count(), history_length);
  for (int i = 0; i < agent_count(); ++i) {
    const AgentSlot& a = agents[static_cast<std::size_t>(i)];
    if (static_cast<int>(a.history.size()) != history_length) throw Error("scene history length mismatch");
    for (int lag = 0; lag < history_length; ++lag) {
      const KinematicState& s = a.history[static_cast<std::size_t>(lag)];
      w.pose(i, lag) = {s.x, s.y, s.theta, s.v};
    }
    w.box_length[static_cast<std::size_t>(i)] = a.state().box_length;
    w.box_width[static_cast<std::size_t>(i)] = a.state().box_width;
    w.hero[static_cast<std::size_t>(i)] = a.hero ? 1 : 0;
    w.alive[static_cast<std::size_t>(i)] = a.alive ? 1 : 0;
  }
  return w;
}

Vec2 box_center(const KinematicState& s) {
  return Vec2{s.x, s.y} + unit_heading(s.theta) * (0.5 * s.wheelbase);
}

OrientedBox vehicle_box(const KinematicState& s) {
  return OrientedBox::make(box_center(s), s.theta, 0.5 * s.box_length, 0.5 * s.box_width);
}

std::optional<LeadInfo> find_lead(const LaneGraph& map, std::span<const KinematicState> states,
                                  std::span<const std::uint8_t> alive, int agent, double range) {
  const KinematicState& me = states[static_cast<std::size_t>(agent)];
  const auto loc = map.locate(box_center(me));
  if (!loc) return std::nullopt;
  std::optional<LeadInfo> best;
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (static_cast<int>(j) == agent || (!alive.empty() && !alive[j])) continue;
    const auto other = map.locate(box_center(states[j]));
    if (!other || other->lane != loc->lane) continue;
    const double ds = other->projection.arclength - loc->projection.arclength;
    if (ds <= 0.0 || ds > range) continue;
    if (!best || ds < best->center_distance) {
      LeadInfo info;
      info.agent = static_cast<int>(j);
      info.center_distance = ds;
      info.gap = ds - 0.5 * (me.box_length + states[j].box_length);
      info.speed = states[j].v;
      best = info;
    }
  }
  return best;
}

}  // namespace closedloop
