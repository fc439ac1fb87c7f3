#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "closedloop/dynamics.hpp"
#include "closedloop/error.hpp"
#include "closedloop/lane_graph.hpp"
#include "closedloop/tape.hpp"

namespace closedloop {

/// Layout of the per-agent feature vector:
///   history    H x (rel_x, rel_y, cos dtheta, sin dtheta, speed), lag 0 first
///   neighbors  k x (rel_x, rel_y, cos dtheta, sin dtheta, rel_speed, absent)
///   lane       lateral offset, heading error, speed limit, curvature,
///              box-to-boundary distance, off-map flag
///   lead       bumper gap and closing speed to the nearest vehicle ahead
///              within lead_half_width of the agent's heading line, absent flag
///   hero       1 when a scripted hero is within hero_radius
/// Positions and headings are expressed in the agent's current frame.
struct FeatureConfig {
  int history = 10;
  int neighbors = 4;
  double neighbor_radius = 60.0;
  double hero_radius = 30.0;
  double lead_half_width = 2.0;

  static constexpr int kHistoryStride = 5;
  static constexpr int kNeighborStride = 6;
  static constexpr int kLaneChannels = 6;
  static constexpr int kLeadChannels = 3;

  int history_offset() const { return 0; }
  int neighbor_offset() const { return kHistoryStride * history; }
  int lane_offset() const { return neighbor_offset() + kNeighborStride * neighbors; }
  int lead_offset() const { return lane_offset() + kLaneChannels; }
  int hero_offset() const { return lead_offset() + kLeadChannels; }
  int dim() const { return hero_offset() + 1; }

  void validate() const;
};

inline constexpr double kFeaturePositionScale = 20.0;
inline constexpr double kFeatureSpeedScale = 20.0;

template <class S>
struct Pose {
  S x{}, y{}, theta{}, v{};
};

/// Joint poses of all agents over the last H ticks, lag 0 = current tick.
template <class S>
struct SceneWindow {
  int agent_count = 0;
  int history = 0;
  std::vector<Pose<S>> poses;  // [agent * history + lag]
  std::vector<double> box_length;
  std::vector<double> box_width;
  std::vector<std::uint8_t> hero;
  std::vector<std::uint8_t> alive;

  SceneWindow() = default;
  SceneWindow(int agents, int hist)
      : agent_count(agents),
        history(hist),
        poses(static_cast<std::size_t>(agents * hist)),
        box_length(static_cast<std::size_t>(agents), 4.8),
        box_width(static_cast<std::size_t>(agents), 1.9),
        hero(static_cast<std::size_t>(agents), 0),
        alive(static_cast<std::size_t>(agents), 1) {}

  Pose<S>& pose(int agent, int lag) { return poses[static_cast<std::size_t>(agent * history + lag)]; }
  const Pose<S>& pose(int agent, int lag) const {
    return poses[static_cast<std::size_t>(agent * history + lag)];
  }
};

/// Indices of the k nearest alive neighbors of `agent`, ordered by distance
/// then index, restricted to `radius`.
template <class S>
std::vector<int> nearest_neighbors(const SceneWindow<S>& w, int agent, int k, double radius) {
  using ad::value_of;
  std::vector<std::pair<double, int>> cand;
  const auto& me = w.pose(agent, 0);
  for (int j = 0; j < w.agent_count; ++j) {
    if (j == agent || !w.alive[static_cast<std::size_t>(j)]) continue;
    const auto& o = w.pose(j, 0);
    const double d = std::hypot(value_of(o.x) - value_of(me.x), value_of(o.y) - value_of(me.y));
    if (d <= radius) cand.emplace_back(d, j);
  }
  std::sort(cand.begin(), cand.end());
  std::vector<int> out;
  for (std::size_t n = 0; n < cand.size() && static_cast<int>(n) < k; ++n) out.push_back(cand[n].second);
  return out;
}

/// Fills `out` (length cfg.dim()) for one agent. Generic over double and
/// ad::Var so the same code feeds both the simulator and closed-loop
/// imitation gradients. Discrete choices (neighbor slots, lane, nearest road
/// edge) are made on values and act as constants for differentiation.
template <class S>
void extract_features(const SceneWindow<S>& w, int agent, const LaneGraph& map, const FeatureConfig& cfg,
                      std::span<S> out) {
  using ad::value_of;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;

  if (agent < 0 || agent >= w.agent_count) throw Error("feature extraction: agent index out of range");
  if (w.history != cfg.history) throw Error("feature extraction: history length mismatch");
  if (static_cast<int>(out.size()) != cfg.dim()) throw Error("feature extraction: output size mismatch");

  const Pose<S>& me = w.pose(agent, 0);
  const S c = cos(me.theta);
  const S s = sin(me.theta);
  auto to_frame_x = [&](const S& dx, const S& dy) { return (c * dx + s * dy) / kFeaturePositionScale; };
  auto to_frame_y = [&](const S& dx, const S& dy) { return (c * dy - s * dx) / kFeaturePositionScale; };

  int o = cfg.history_offset();
  for (int lag = 0; lag < cfg.history; ++lag) {
    const Pose<S>& p = w.pose(agent, lag);
    const S dx = p.x - me.x;
    const S dy = p.y - me.y;
    const S dtheta = p.theta - me.theta;
    out[o++] = to_frame_x(dx, dy);
    out[o++] = to_frame_y(dx, dy);
    out[o++] = cos(dtheta);
    out[o++] = sin(dtheta);
    out[o++] = p.v / kFeatureSpeedScale;
  }

  const auto nbrs = nearest_neighbors(w, agent, cfg.neighbors, cfg.neighbor_radius);
  o = cfg.neighbor_offset();
  for (int slot = 0; slot < cfg.neighbors; ++slot) {
    if (slot < static_cast<int>(nbrs.size())) {
      const Pose<S>& p = w.pose(nbrs[static_cast<std::size_t>(slot)], 0);
      const S dx = p.x - me.x;
      const S dy = p.y - me.y;
      const S dtheta = p.theta - me.theta;
      out[o++] = to_frame_x(dx, dy);
      out[o++] = to_frame_y(dx, dy);
      out[o++] = cos(dtheta);
      out[o++] = sin(dtheta);
      out[o++] = (p.v - me.v) / kFeatureSpeedScale;
      out[o++] = S(0.0);
    } else {
      for (int k = 0; k < FeatureConfig::kNeighborStride - 1; ++k) out[o++] = S(0.0);
      out[o++] = S(1.0);
    }
  }

  o = cfg.lane_offset();
  const Vec2 pos_value{value_of(me.x), value_of(me.y)};
  const auto loc = map.locate(pos_value);
  if (!loc) {
    for (int k = 0; k < FeatureConfig::kLaneChannels - 1; ++k) out[o++] = S(0.0);
    out[o++] = S(1.0);
  } else {
    const Lane& lane = map.lanes()[static_cast<std::size_t>(loc->lane)];
    const auto& verts = lane.centerline.vertices();
    const Vec2 a = verts[loc->projection.segment];
    const Vec2 b = verts[loc->projection.segment + 1];
    const Vec2 d = (b - a) * (1.0 / distance(a, b));
    const double lane_heading = std::atan2(d.y, d.x);
    const S lateral = d.x * (me.y - a.y) - d.y * (me.x - a.x);
    const S herr = me.theta - lane_heading;
    const LaneNode& node = map.nodes()[static_cast<std::size_t>(loc->node)];

    // Distance from the box side to the nearest road edge, positive inside.
    const auto& road = map.road_polygon();
    const std::size_t e = nearest_edge(pos_value, road);
    const Vec2 ea = road[e];
    const Vec2 eb = road[(e + 1) % road.size()];
    const Vec2 ed = eb - ea;
    const double t = dot(pos_value - ea, ed) / dot(ed, ed);
    S edge_dist;
    if (t <= 0.0) {
      edge_dist = sqrt((me.x - ea.x) * (me.x - ea.x) + (me.y - ea.y) * (me.y - ea.y));
    } else if (t >= 1.0) {
      edge_dist = sqrt((me.x - eb.x) * (me.x - eb.x) + (me.y - eb.y) * (me.y - eb.y));
    } else {
      const double inv = 1.0 / norm(ed);
      const S cr = (ed.x * (me.y - ea.y) - ed.y * (me.x - ea.x)) * inv;
      edge_dist = value_of(cr) < 0.0 ? -cr : cr;
    }
    const bool inside = point_in_polygon(pos_value, road);
    const S boundary =
        (inside ? edge_dist : -edge_dist) - 0.5 * w.box_width[static_cast<std::size_t>(agent)];

    out[o++] = lateral;
    out[o++] = atan2(sin(herr), cos(herr));
    out[o++] = S(node.speed_limit / kFeatureSpeedScale);
    out[o++] = S(node.curvature);
    out[o++] = boundary;
    out[o++] = S(0.0);
  }

  o = cfg.lead_offset();
  int lead = -1;
  double lead_dx = cfg.neighbor_radius;
  for (int j = 0; j < w.agent_count; ++j) {
    if (j == agent || !w.alive[static_cast<std::size_t>(j)]) continue;
    const auto& p = w.pose(j, 0);
    const double dx = value_of(p.x) - pos_value.x;
    const double dy = value_of(p.y) - pos_value.y;
    const double fx = value_of(c) * dx + value_of(s) * dy;
    const double fy = value_of(c) * dy - value_of(s) * dx;
    if (fx > 0.0 && fx < lead_dx && std::abs(fy) <= cfg.lead_half_width) {
      lead = j;
      lead_dx = fx;
    }
  }
  if (lead < 0) {
    out[o++] = S(cfg.neighbor_radius / kFeaturePositionScale);
    out[o++] = S(0.0);
    out[o++] = S(1.0);
  } else {
    const Pose<S>& p = w.pose(lead, 0);
    const double half_lengths =
        0.5 * (w.box_length[static_cast<std::size_t>(agent)] + w.box_length[static_cast<std::size_t>(lead)]);
    out[o++] = (c * (p.x - me.x) + s * (p.y - me.y) - half_lengths) / kFeaturePositionScale;
    out[o++] = (me.v - p.v * cos(p.theta - me.theta)) / kFeatureSpeedScale;
    out[o++] = S(0.0);
  }

  bool hero_near = false;
  for (int j = 0; j < w.agent_count; ++j) {
    if (j == agent || !w.hero[static_cast<std::size_t>(j)] || !w.alive[static_cast<std::size_t>(j)]) continue;
    const auto& p = w.pose(j, 0);
    const double dd = std::hypot(value_of(p.x) - pos_value.x, value_of(p.y) - pos_value.y);
    if (dd <= cfg.hero_radius) hero_near = true;
  }
  out[cfg.hero_offset()] = S(hero_near ? 1.0 : 0.0);
}

/// Convenience wrapper for the double path.
std::vector<double> extract_features(const SceneWindow<double>& w, int agent, const LaneGraph& map,
                                     const FeatureConfig& cfg);

}  // namespace closedloop
