#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/oracles.hpp"
#include "closedloop/error.hpp"
#include "closedloop/geometry.hpp"
#include "closedloop/lane_graph.hpp"
#include "closedloop/rng.hpp"

using namespace closedloop;

namespace {

OrientedBox unit_square(Vec2 c, double heading = 0.0) { return OrientedBox::make(c, heading, 0.5, 0.5); }

Polygon square_road(double half) { return {{-half, -half}, {half, -half}, {half, half}, {-half, half}}; }

MapSpec single_lane(double length) {
  MapSpec m;
  m.name = "single";
  LaneSpec l;
  l.id = "a";
  l.centerline = {{0.0, 0.0}, {length, 0.0}};
  l.speed_limit = 25.0;
  m.lanes.push_back(l);
  m.road_polygon = {{-5.0, -5.0}, {length + 5.0, -5.0}, {length + 5.0, 5.0}, {-5.0, 5.0}};
  return m;
}

}  // namespace

TEST_CASE("obb_overlap on hand-built boxes") {
  CHECK(obb_overlap(unit_square({0, 0}), unit_square({0.5, 0})));
  CHECK_FALSE(obb_overlap(unit_square({0, 0}), unit_square({10, 0})));
  // Touching edges count as overlap.
  CHECK(obb_overlap(unit_square({0, 0}), unit_square({1.0, 0})));

  const oracle::Box a{0, 0, 0, 0.5, 0.5};
  const oracle::Box b{1.2, 0, M_PI / 4, 0.5, 0.5};
  CHECK(obb_overlap(oracle::to_obb(a), oracle::to_obb(b)) == oracle::boxes_overlap_sampled(a, b));
  // Corner of the rotated square reaches 1.2 - 0.707 = 0.493 < 0.5.
  CHECK(obb_overlap(oracle::to_obb(a), oracle::to_obb(b)));
}

TEST_CASE("obb_overlap is symmetric and agrees with the sampling oracle") {
  Rng rng(7);
  int compared = 0;
  for (int k = 0; k < 300; ++k) {
    const oracle::Box a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-M_PI, M_PI), rng.uniform(0.25, 1.0),
                        rng.uniform(0.25, 1.0)};
    const oracle::Box b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-M_PI, M_PI), rng.uniform(0.25, 1.0),
                        rng.uniform(0.25, 1.0)};
    const bool ab = obb_overlap(oracle::to_obb(a), oracle::to_obb(b));
    CHECK(ab == obb_overlap(oracle::to_obb(b), oracle::to_obb(a)));
    const bool outer = oracle::boxes_overlap_sampled(oracle::grown(a, 1e-3), b, 2000);
    const bool inner = oracle::boxes_overlap_sampled(oracle::grown(a, -1e-3), b, 2000);
    if (outer != inner) continue;
    ++compared;
    CHECK(ab == outer);
  }
  CHECK(compared > 250);
}

TEST_CASE("OrientedBox::make rejects empty extents") {
  CHECK_THROWS_AS(OrientedBox::make({0, 0}, 0, 0.0, 1.0), GeometryError);
  CHECK_THROWS_AS(OrientedBox::make({0, 0}, 0, 1.0, -1.0), GeometryError);
}

TEST_CASE("offroad_check follows the intersection rule") {
  const Polygon road = square_road(10.0);
  CHECK_FALSE(offroad_check(unit_square({0, 0}), road));
  CHECK(offroad_check(unit_square({60, 0}), road));
  CHECK_FALSE(offroad_check(unit_square({10, 0}), road));
  // Only a corner pokes into the road.
  CHECK_FALSE(offroad_check(unit_square({10.4, 10.4}), road));
  CHECK(offroad_check(unit_square({10.8, 10.8}), road));
}

TEST_CASE("offroad_check is false whenever a corner is on the road") {
  const Polygon road = {{0, 0}, {30, 0}, {30, 8}, {12, 8}, {12, 20}, {0, 20}};
  Rng rng(11);
  for (int k = 0; k < 500; ++k) {
    const OrientedBox b = OrientedBox::make({rng.uniform(-5, 35), rng.uniform(-5, 25)}, rng.uniform(-M_PI, M_PI),
                                            rng.uniform(0.5, 3.0), rng.uniform(0.3, 1.5));
    bool corner_inside = false;
    for (Vec2 c : b.corners()) corner_inside = corner_inside || point_in_polygon(c, road);
    if (corner_inside) CHECK_FALSE(offroad_check(b, road));
  }
}

TEST_CASE("polygon helpers") {
  const Polygon sq = square_road(1.0);
  CHECK(signed_area(sq) == doctest::Approx(4.0));
  CHECK(is_simple_polygon(sq));
  const Polygon bowtie = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  CHECK_FALSE(is_simple_polygon(bowtie));
  CHECK(point_in_polygon({0.2, 0.3}, sq));
  CHECK_FALSE(point_in_polygon({1.5, 0.0}, sq));
  CHECK(signed_distance_to_boundary({0.5, 0.0}, sq) == doctest::Approx(0.5));
  CHECK(signed_distance_to_boundary({3.0, 0.0}, sq) == doctest::Approx(-2.0));
  CHECK(point_segment_distance({1, 1}, {0, 0}, {2, 0}) == doctest::Approx(1.0));
  CHECK(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
  CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
  CHECK(wrap_angle(3 * M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI / 2) == doctest::Approx(-M_PI / 2));
}

TEST_CASE("project_onto_polyline") {
  const Polyline line({{0, 0}, {10, 0}});
  SUBCASE("point on the line") {
    const auto p = project_onto_polyline({3, 0}, line);
    CHECK(p.lateral == 0.0);
    CHECK(p.arclength == doctest::Approx(3.0));
    CHECK_FALSE(p.clamped);
  }
  SUBCASE("left of travel is positive") {
    const auto p = project_onto_polyline({1, 1}, line);
    CHECK(p.arclength == doctest::Approx(1.0));
    CHECK(p.lateral == doctest::Approx(1.0));
    CHECK_FALSE(p.clamped);
    CHECK(project_onto_polyline({1, -1}, line).lateral == doctest::Approx(-1.0));
  }
  SUBCASE("beyond the end clamps") {
    const auto p = project_onto_polyline({12, 0}, line);
    CHECK(p.arclength == doctest::Approx(10.0));
    CHECK(p.clamped);
    CHECK(project_onto_polyline({-3, 0}, line).clamped);
  }
  SUBCASE("ties go to the smaller arclength") {
    const Polyline vee({{0, 0}, {5, 5}, {10, 0}});
    const auto p = project_onto_polyline({5, 0}, vee);
    CHECK(p.segment == 0);
    CHECK(p.arclength == doctest::Approx(std::sqrt(12.5)));
  }
  SUBCASE("degenerate polylines are rejected") {
    CHECK_THROWS_AS(Polyline({{1, 1}, {1, 1}}), GeometryError);
    CHECK_THROWS_AS(Polyline({{1, 1}}), GeometryError);
  }
}

TEST_CASE("projection is no farther than any vertex") {
  const Polyline line({{0, 0}, {10, 2}, {15, 8}, {22, 8}, {30, 0}});
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const Vec2 p{rng.uniform(-10, 40), rng.uniform(-10, 20)};
    const auto proj = project_onto_polyline(p, line);
    const Vec2 foot = line.point_at(proj.arclength);
    const double d = distance(p, foot);
    CHECK(d == doctest::Approx(std::abs(proj.lateral)).epsilon(1e-9));
    for (Vec2 v : line.vertices()) CHECK(d <= distance(p, v) + 1e-9);
  }
}

TEST_CASE("build_lane_graph discretizes every ten meters") {
  const LaneGraph g = build_lane_graph(single_lane(100.0));
  CHECK(g.nodes().size() == 10);
  CHECK(g.edge_count(EdgeType::successor) == 9);
  CHECK(g.edge_count(EdgeType::predecessor) == 9);
  for (const LaneNode& n : g.nodes()) {
    CHECK(n.length > 0.0);
    CHECK(n.length <= kLaneSegmentLength);
    CHECK(n.speed_limit == 25.0);
    CHECK(point_in_polygon(n.center, g.road_polygon()));
  }
  for (const LaneEdge& e : g.edges()) {
    if (e.type != EdgeType::successor) continue;
    const auto back = g.neighbors(e.to, EdgeType::predecessor);
    CHECK(std::find(back.begin(), back.end(), e.from) != back.end());
  }
}

TEST_CASE("parallel lanes are linked left and right") {
  MapSpec m = single_lane(100.0);
  LaneSpec left = m.lanes.front();
  left.id = "b";
  left.centerline = {{0.0, 3.7}, {100.0, 3.7}};
  m.lanes.push_back(left);
  m.road_polygon = {{-5, -5}, {105, -5}, {105, 10}, {-5, 10}};
  const LaneGraph g = build_lane_graph(m);
  for (int n = 0; n < static_cast<int>(g.nodes().size()); ++n) {
    const auto l = g.neighbors(n, EdgeType::left_neighbor).size();
    const auto r = g.neighbors(n, EdgeType::right_neighbor).size();
    CHECK(l + r == 1);
    if (g.nodes()[static_cast<std::size_t>(n)].lane == 0) CHECK(l == 1);
  }
  CHECK(g.adjacent_lane(0, 50.0, EdgeType::left_neighbor) == 1);
  CHECK(g.adjacent_lane(1, 50.0, EdgeType::right_neighbor) == 0);
  CHECK(g.adjacent_lane(0, 50.0, EdgeType::right_neighbor) == -1);
}

TEST_CASE("build_lane_graph rejects bad maps") {
  CHECK_THROWS_AS(build_lane_graph(single_lane(0.5)), Error);
  MapSpec m = single_lane(100.0);
  m.lanes.front().speed_limit.reset();
  CHECK_THROWS_AS(build_lane_graph(m), Error);
}

TEST_CASE("locate finds the lane under a point") {
  const LaneGraph g = build_lane_graph(single_lane(100.0));
  const auto loc = g.locate({42.0, 0.5});
  REQUIRE(loc);
  CHECK(loc->lane == 0);
  CHECK(loc->node == 4);
  CHECK(loc->projection.lateral == doctest::Approx(0.5));
  CHECK_FALSE(g.locate({42.0, 30.0}));
}

TEST_CASE("built-in maps are valid") {
  for (int v = 0; v < map_variant_count(); ++v) {
    const LaneGraph g = build_lane_graph(map_variant(v));
    CHECK(is_simple_polygon(g.road_polygon()));
    CHECK(signed_area(g.road_polygon()) > 0.0);
    for (const LaneNode& n : g.nodes()) CHECK(point_in_polygon(n.center, g.road_polygon()));
  }
}
