#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace closedloop {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 unit_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Rectangle with arbitrary orientation. Construct through make() to get the
/// positive-extent check.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.5;
  double half_width = 0.5;

  static OrientedBox make(Vec2 center, double heading, double half_length, double half_width);

  /// Corners in counter-clockwise order starting at front-left.
  std::array<Vec2, 4> corners() const;
  bool contains(Vec2 p) const;
};

/// Separating-axis test on the four edge normals; touching boxes overlap.
bool obb_overlap(const OrientedBox& a, const OrientedBox& b);

/// Simple polygon, counter-clockwise vertex order, implicitly closed.
using Polygon = std::vector<Vec2>;

double signed_area(std::span<const Vec2> polygon);
bool is_simple_polygon(std::span<const Vec2> polygon);

/// Even-odd ray casting.
bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Index of the polygon edge (vertex i to i+1) closest to p.
std::size_t nearest_edge(Vec2 p, std::span<const Vec2> polygon);

/// Positive inside the polygon, negative outside.
double signed_distance_to_boundary(Vec2 p, std::span<const Vec2> polygon);

/// True when the box no longer intersects the road polygon at all. A box
/// straddling the boundary is still on the road.
bool offroad_check(const OrientedBox& box, std::span<const Vec2> road);

struct PolylineProjection {
  double arclength = 0.0;
  /// Signed distance to the closest point, left of travel positive.
  double lateral = 0.0;
  bool clamped = false;
  /// Segment that produced the closest point.
  std::size_t segment = 0;
};

class Polyline {
 public:
  Polyline() = default;
  /// Throws GeometryError for fewer than two vertices or zero total length.
  explicit Polyline(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::span<const double> cumulative() const { return cumulative_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::size_t segment_count() const { return vertices_.size() - 1; }

  /// Point at arclength s, clamped to the polyline extent.
  Vec2 point_at(double s) const;
  /// Heading of the segment containing arclength s.
  double heading_at(double s) const;
  std::size_t segment_at(double s) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<double> cumulative_;
};

/// Closest point on the polyline. Ties between segments go to the smaller
/// arclength; feet beyond either end clamp to the end vertex.
PolylineProjection project_onto_polyline(Vec2 p, const Polyline& line);

}  // namespace closedloop
