#include "closedloop/lane_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "closedloop/error.hpp"

namespace closedloop {
namespace {

constexpr double kMinCenterlineLength = 1.0;
constexpr double kMaxNeighborHeadingDiff = 30.0 * M_PI / 180.0;
constexpr double kSuccessorJoinTolerance = 0.5;

}  // namespace

std::vector<int> LaneGraph::neighbors(int node, EdgeType type) const {
  std::vector<int> out;
  for (const LaneEdge& e : edges_) {
    if (e.from == node && e.type == type) out.push_back(e.to);
  }
  return out;
}

std::size_t LaneGraph::edge_count(EdgeType type) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [type](const LaneEdge& e) { return e.type == type; }));
}

int LaneGraph::node_at(int lane, double s) const {
  const Lane& l = lanes_.at(static_cast<std::size_t>(lane));
  for (std::size_t k = l.nodes.size(); k-- > 0;) {
    const LaneNode& n = nodes_[static_cast<std::size_t>(l.nodes[k])];
    if (s >= n.start_arclength) return l.nodes[k];
  }
  return l.nodes.front();
}

LaneLocation LaneGraph::locate_on_lane(Vec2 p, int lane) const {
  LaneLocation loc;
  loc.lane = lane;
  loc.projection = project_onto_polyline(p, lanes_.at(static_cast<std::size_t>(lane)).centerline);
  loc.node = node_at(lane, loc.projection.arclength);
  return loc;
}

std::optional<LaneLocation> LaneGraph::locate(Vec2 p, double max_lateral_widths) const {
  std::optional<LaneLocation> best;
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const PolylineProjection proj = project_onto_polyline(p, lanes_[i].centerline);
    if (proj.clamped) continue;
    if (std::abs(proj.lateral) > max_lateral_widths * lanes_[i].width) continue;
    if (!best || std::abs(proj.lateral) < std::abs(best->projection.lateral)) {
      LaneLocation loc;
      loc.lane = static_cast<int>(i);
      loc.projection = proj;
      loc.node = node_at(loc.lane, proj.arclength);
      best = loc;
    }
  }
  return best;
}

int LaneGraph::adjacent_lane(int lane, double s, EdgeType side) const {
  const auto adj = neighbors(node_at(lane, s), side);
  return adj.empty() ? -1 : nodes_[static_cast<std::size_t>(adj.front())].lane;
}

LaneGraph build_lane_graph(const MapSpec& spec) {
  if (spec.lanes.empty()) throw GeometryError("map has no lanes");
  if (!is_simple_polygon(spec.road_polygon)) throw GeometryError("road polygon is not simple");

  LaneGraph g;
  g.name_ = spec.name;
  g.road_ = spec.road_polygon;
  if (signed_area(g.road_) < 0.0) std::reverse(g.road_.begin(), g.road_.end());

  for (const LaneSpec& ls : spec.lanes) {
    if (!ls.speed_limit || !(*ls.speed_limit > 0.0)) {
      throw GeometryError("lane '" + ls.id + "' is missing a positive speed limit");
    }
    if (!(ls.width > 0.0)) throw GeometryError("lane '" + ls.id + "' has non-positive width");
    if (ls.centerline.size() < 2) throw GeometryError("lane '" + ls.id + "' needs two vertices");
    Polyline line(ls.centerline);
    if (line.length() < kMinCenterlineLength) {
      throw GeometryError("lane '" + ls.id + "' centerline shorter than 1 m");
    }

    Lane lane;
    lane.id = ls.id;
    lane.width = ls.width;
    lane.speed_limit = *ls.speed_limit;
    const int lane_index = static_cast<int>(g.lanes_.size());
    const auto pieces = static_cast<int>(std::ceil(line.length() / kLaneSegmentLength - 1e-9));
    const double piece_len = line.length() / pieces;
    for (int k = 0; k < pieces; ++k) {
      const double s0 = k * piece_len;
      const double s1 = (k + 1) * piece_len;
      LaneNode node;
      node.lane = lane_index;
      node.start_arclength = s0;
      node.length = piece_len;
      node.width = ls.width;
      node.speed_limit = *ls.speed_limit;
      node.center = line.point_at(0.5 * (s0 + s1));
      node.heading = line.heading_at(0.5 * (s0 + s1));
      const double h0 = line.heading_at(s0);
      const double h1 = line.heading_at(std::max(s0, s1 - 1e-9));
      node.curvature = wrap_angle(h1 - h0) / piece_len;
      if (!point_in_polygon(node.center, g.road_)) {
        throw GeometryError("lane '" + ls.id + "' node center lies outside the road polygon");
      }
      const int idx = static_cast<int>(g.nodes_.size());
      if (k > 0) {
        g.edges_.push_back({idx - 1, idx, EdgeType::successor});
        g.edges_.push_back({idx, idx - 1, EdgeType::predecessor});
      }
      lane.nodes.push_back(idx);
      g.nodes_.push_back(node);
    }
    lane.centerline = std::move(line);
    g.lanes_.push_back(std::move(lane));
  }

  // Lane-to-lane continuation.
  for (std::size_t a = 0; a < g.lanes_.size(); ++a) {
    for (std::size_t b = 0; b < g.lanes_.size(); ++b) {
      if (a == b) continue;
      const Vec2 end = g.lanes_[a].centerline.vertices().back();
      const Vec2 start = g.lanes_[b].centerline.vertices().front();
      if (distance(end, start) <= kSuccessorJoinTolerance) {
        const int from = g.lanes_[a].nodes.back();
        const int to = g.lanes_[b].nodes.front();
        g.edges_.push_back({from, to, EdgeType::successor});
        g.edges_.push_back({to, from, EdgeType::predecessor});
      }
    }
  }

  // Left/right adjacency: lateral offset within [0.5, 1.5] lane widths and
  // headings within 30 degrees. The nearest qualifying lane per side wins.
  for (std::size_t n = 0; n < g.nodes_.size(); ++n) {
    const LaneNode& node = g.nodes_[n];
    int best_left = -1, best_right = -1;
    double left_dist = 0.0, right_dist = 0.0;
    for (std::size_t b = 0; b < g.lanes_.size(); ++b) {
      if (static_cast<int>(b) == node.lane) continue;
      const PolylineProjection proj = project_onto_polyline(node.center, g.lanes_[b].centerline);
      if (proj.clamped) continue;
      const double off = std::abs(proj.lateral);
      if (off < 0.5 * node.width || off > 1.5 * node.width) continue;
      const double other_heading = g.lanes_[b].centerline.heading_at(proj.arclength);
      if (std::abs(wrap_angle(other_heading - node.heading)) >= kMaxNeighborHeadingDiff) continue;
      const int target = g.node_at(static_cast<int>(b), proj.arclength);
      // Node right of the other lane means the other lane is on our left.
      if (proj.lateral < 0.0) {
        if (best_left < 0 || off < left_dist) best_left = target, left_dist = off;
      } else {
        if (best_right < 0 || off < right_dist) best_right = target, right_dist = off;
      }
    }
    if (best_left >= 0) g.edges_.push_back({static_cast<int>(n), best_left, EdgeType::left_neighbor});
    if (best_right >= 0) g.edges_.push_back({static_cast<int>(n), best_right, EdgeType::right_neighbor});
  }
  return g;
}

namespace {

constexpr double kLaneWidth = 3.7;
constexpr double kShoulder = 0.5;
constexpr double kMapStartX = -300.0;
constexpr double kMapEndX = 500.0;

}  // namespace

MapSpec straight_highway_map() {
  MapSpec m;
  m.name = "straight";
  m.lanes.push_back({"right", {{kMapStartX, 0.0}, {kMapEndX, 0.0}}, kLaneWidth, 20.0});
  m.lanes.push_back({"left", {{kMapStartX, kLaneWidth}, {kMapEndX, kLaneWidth}}, kLaneWidth, 24.0});
  const double lo = -0.5 * kLaneWidth - kShoulder;
  const double hi = 1.5 * kLaneWidth + kShoulder;
  m.road_polygon = {{kMapStartX - 10.0, lo}, {kMapEndX + 10.0, lo}, {kMapEndX + 10.0, hi}, {kMapStartX - 10.0, hi}};
  return m;
}

MapSpec merge_map() {
  MapSpec m = straight_highway_map();
  m.name = "merge";
  constexpr double kRampEnd = 150.0;
  m.lanes.push_back({"ramp", {{kMapStartX, -kLaneWidth}, {kRampEnd, -kLaneWidth}}, kLaneWidth, 18.0});
  const double main_lo = -0.5 * kLaneWidth - kShoulder;
  const double ramp_lo = -1.5 * kLaneWidth - kShoulder;
  const double hi = 1.5 * kLaneWidth + kShoulder;
  m.road_polygon = {{kMapStartX - 10.0, ramp_lo}, {kRampEnd, ramp_lo},      {kRampEnd + 25.0, main_lo},
                    {kMapEndX + 10.0, main_lo},   {kMapEndX + 10.0, hi},    {kMapStartX - 10.0, hi}};
  return m;
}

int map_variant_count() { return 2; }

MapSpec map_variant(int id) {
  switch (id) {
    case 0:
      return straight_highway_map();
    case 1:
      return merge_map();
    default:
      throw GeometryError("unknown map variant " + std::to_string(id));
  }
}

void to_json(nlohmann::json& j, const MapSpec& spec) {
  auto points = [](const std::vector<Vec2>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Vec2& p : pts) arr.push_back({p.x, p.y});
    return arr;
  };
  j = nlohmann::json::object();
  j["name"] = spec.name;
  j["lanes"] = nlohmann::json::array();
  for (const LaneSpec& l : spec.lanes) {
    nlohmann::json lj;
    lj["id"] = l.id;
    lj["centerline"] = points(l.centerline);
    lj["width"] = l.width;
    if (l.speed_limit) lj["speed_limit"] = *l.speed_limit;
    j["lanes"].push_back(lj);
  }
  j["road_polygon"] = points(spec.road_polygon);
}

void from_json(const nlohmann::json& j, MapSpec& spec) {
  auto points = [](const nlohmann::json& arr) {
    std::vector<Vec2> pts;
    for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return pts;
  };
  spec.name = j.value("name", std::string{});
  spec.lanes.clear();
  for (const auto& lj : j.at("lanes")) {
    LaneSpec l;
    l.id = lj.value("id", std::string{});
    l.centerline = points(lj.at("centerline"));
    l.width = lj.at("width").get<double>();
    if (lj.contains("speed_limit")) l.speed_limit = lj.at("speed_limit").get<double>();
    spec.lanes.push_back(std::move(l));
  }
  spec.road_polygon = points(j.at("road_polygon"));
}

MapSpec load_map_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open map file " + path.string());
  try {
    return nlohmann::json::parse(in).get<MapSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed map file " + path.string() + ": " + e.what());
  }
}

MapSpec transform_map(const MapSpec& spec, double rotation, Vec2 translation) {
  const double c = std::cos(rotation), s = std::sin(rotation);
  auto tf = [&](Vec2 p) { return Vec2{c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y}; };
  MapSpec out = spec;
  for (LaneSpec& l : out.lanes) {
    for (Vec2& p : l.centerline) p = tf(p);
  }
  for (Vec2& p : out.road_polygon) p = tf(p);
  return out;
}

}  // namespace closedloop
