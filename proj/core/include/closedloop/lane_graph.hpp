#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "closedloop/geometry.hpp"

namespace closedloop {

/// Maximum lane-segment length produced by centerline discretization.
inline constexpr double kLaneSegmentLength = 10.0;

struct LaneSpec {
  std::string id;
  std::vector<Vec2> centerline;
  double width = 3.7;
  std::optional<double> speed_limit;
};

/// Map description as read from disk: centerlines plus the drivable polygon.
struct MapSpec {
  std::string name;
  std::vector<LaneSpec> lanes;
  Polygon road_polygon;
};

enum class EdgeType { successor, predecessor, left_neighbor, right_neighbor };

struct LaneEdge {
  int from = 0;
  int to = 0;
  EdgeType type = EdgeType::successor;
};

struct LaneNode {
  int lane = 0;
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
  double curvature = 0.0;
  double speed_limit = 0.0;
  /// Arclength of the node start along its lane centerline.
  double start_arclength = 0.0;
};

struct Lane {
  std::string id;
  Polyline centerline;
  double width = 0.0;
  double speed_limit = 0.0;
  std::vector<int> nodes;
};

/// Where a point sits relative to the lane graph.
struct LaneLocation {
  int lane = -1;
  int node = -1;
  PolylineProjection projection;
};

class LaneGraph {
 public:
  const std::vector<LaneNode>& nodes() const { return nodes_; }
  const std::vector<LaneEdge>& edges() const { return edges_; }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const Polygon& road_polygon() const { return road_; }
  const std::string& name() const { return name_; }

  std::vector<int> neighbors(int node, EdgeType type) const;
  std::size_t edge_count(EdgeType type) const;

  /// Node of `lane` covering arclength s.
  int node_at(int lane, double s) const;

  /// Closest lane centerline to p. Empty when p is farther than
  /// `max_lateral_widths` lane widths from every lane or only projects past a lane end.
  std::optional<LaneLocation> locate(Vec2 p, double max_lateral_widths = 1.5) const;
  /// Projection onto a specific lane.
  LaneLocation locate_on_lane(Vec2 p, int lane) const;

  /// Lane laterally adjacent to `lane` on the given side near arclength s, or -1.
  int adjacent_lane(int lane, double s, EdgeType side) const;

 private:
  friend LaneGraph build_lane_graph(const MapSpec& spec);

  std::string name_;
  std::vector<LaneNode> nodes_;
  std::vector<LaneEdge> edges_;
  std::vector<Lane> lanes_;
  Polygon road_;
};

/// Discretizes centerlines into segments of at most 10 m and wires up
/// successor/predecessor and left/right adjacency.
LaneGraph build_lane_graph(const MapSpec& spec);

/// Built-in desk-scale maps. Variant 0 is a straight two-lane highway,
/// variant 1 adds an on-ramp acceleration lane that ends at x = 150 m.
MapSpec straight_highway_map();
MapSpec merge_map();
MapSpec map_variant(int id);
int map_variant_count();

void to_json(nlohmann::json& j, const MapSpec& spec);
void from_json(const nlohmann::json& j, MapSpec& spec);
MapSpec load_map_spec(const std::filesystem::path& path);

/// Rigidly transforms every coordinate of a map.
MapSpec transform_map(const MapSpec& spec, double rotation, Vec2 translation);

}  // namespace closedloop
