#include "closedloop/geometry.hpp"

#include <algorithm>
#include <limits>

#include "closedloop/error.hpp"

namespace closedloop {

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

OrientedBox OrientedBox::make(Vec2 center, double heading, double half_length, double half_width) {
  if (!(half_length > 0.0) || !(half_width > 0.0)) {
    throw GeometryError("oriented box extents must be positive");
  }
  if (!std::isfinite(center.x) || !std::isfinite(center.y) || !std::isfinite(heading)) {
    throw GeometryError("oriented box pose must be finite");
  }
  return OrientedBox{center, heading, half_length, half_width};
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 f = unit_heading(heading) * half_length;
  const Vec2 l = Vec2{-std::sin(heading), std::cos(heading)} * half_width;
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

bool OrientedBox::contains(Vec2 p) const {
  const Vec2 d = p - center;
  const Vec2 f = unit_heading(heading);
  const Vec2 l{-f.y, f.x};
  return std::abs(dot(d, f)) <= half_length && std::abs(dot(d, l)) <= half_width;
}

namespace {

// Projection radius of a box onto a unit axis.
double projected_radius(const OrientedBox& b, Vec2 axis) {
  const Vec2 f = unit_heading(b.heading);
  const Vec2 l{-f.y, f.x};
  return b.half_length * std::abs(dot(f, axis)) + b.half_width * std::abs(dot(l, axis));
}

}  // namespace

bool obb_overlap(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 d = b.center - a.center;
  const Vec2 fa = unit_heading(a.heading);
  const Vec2 fb = unit_heading(b.heading);
  const std::array<Vec2, 4> axes{fa, Vec2{-fa.y, fa.x}, fb, Vec2{-fb.y, fb.x}};
  for (const Vec2& axis : axes) {
    const double separation = std::abs(dot(d, axis));
    if (separation > projected_radius(a, axis) + projected_radius(b, axis)) return false;
  }
  return true;
}

double signed_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * twice;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const int o1 = orientation(a0, a1, b0);
  const int o2 = orientation(a0, a1, b1);
  const int o3 = orientation(b0, b1, a0);
  const int o4 = orientation(b0, b1, a1);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a0, a1, b0)) return true;
  if (o2 == 0 && on_segment(a0, a1, b1)) return true;
  if (o3 == 0 && on_segment(b0, b1, a0)) return true;
  if (o4 == 0 && on_segment(b0, b1, a1)) return true;
  return false;
}

bool is_simple_polygon(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a0 = polygon[i];
    const Vec2 a1 = polygon[(i + 1) % n];
    if (a0 == a1) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(a0, a1, polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return distance(p, a + d * t);
}

std::size_t nearest_edge(Vec2 p, std::span<const Vec2> polygon) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const double dist = point_segment_distance(p, polygon[i], polygon[(i + 1) % polygon.size()]);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

double signed_distance_to_boundary(Vec2 p, std::span<const Vec2> polygon) {
  const std::size_t e = nearest_edge(p, polygon);
  const double dist = point_segment_distance(p, polygon[e], polygon[(e + 1) % polygon.size()]);
  return point_in_polygon(p, polygon) ? dist : -dist;
}

bool offroad_check(const OrientedBox& box, std::span<const Vec2> road) {
  const auto corners = box.corners();
  for (const Vec2& c : corners) {
    if (point_in_polygon(c, road)) return false;
  }
  for (const Vec2& v : road) {
    if (box.contains(v)) return false;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 a0 = corners[i];
    const Vec2 a1 = corners[(i + 1) % 4];
    for (std::size_t j = 0; j < road.size(); ++j) {
      if (segments_intersect(a0, a1, road[j], road[(j + 1) % road.size()])) return false;
    }
  }
  return true;
}

Polyline::Polyline(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw GeometryError("polyline needs at least two vertices");
  cumulative_.resize(vertices_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + distance(vertices_[i - 1], vertices_[i]);
  }
  if (!(cumulative_.back() > 0.0)) throw GeometryError("polyline has zero length");
}

std::size_t Polyline::segment_at(double s) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t seg = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  seg = std::min(seg, segment_count() - 1);
  // Skip zero-length segments so headings stay defined.
  while (seg + 1 < segment_count() && cumulative_[seg + 1] == cumulative_[seg]) ++seg;
  while (seg > 0 && cumulative_[seg + 1] == cumulative_[seg]) --seg;
  return seg;
}

Vec2 Polyline::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t seg = segment_at(s);
  const double seg_len = cumulative_[seg + 1] - cumulative_[seg];
  if (seg_len == 0.0) return vertices_[seg];
  const double t = (s - cumulative_[seg]) / seg_len;
  return vertices_[seg] + (vertices_[seg + 1] - vertices_[seg]) * t;
}

double Polyline::heading_at(double s) const {
  const std::size_t seg = segment_at(std::clamp(s, 0.0, length()));
  const Vec2 d = vertices_[seg + 1] - vertices_[seg];
  return std::atan2(d.y, d.x);
}

PolylineProjection project_onto_polyline(Vec2 p, const Polyline& line) {
  const auto& v = line.vertices();
  const auto cum = line.cumulative();
  if (v.size() < 2 || !(line.length() > 0.0)) throw GeometryError("degenerate polyline");

  // First and last segments with nonzero length bound the extent.
  std::size_t first = 0;
  while (cum[first + 1] == cum[first]) ++first;
  std::size_t last = line.segment_count() - 1;
  while (cum[last + 1] == cum[last]) --last;

  PolylineProjection best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i <= last; ++i) {
    const Vec2 a = v[i];
    const Vec2 d = v[i + 1] - a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) continue;
    double t = dot(p - a, d) / len2;
    bool clamped = false;
    if (t < 0.0) {
      clamped = (i == first);
      t = 0.0;
    } else if (t > 1.0) {
      clamped = (i == last);
      t = 1.0;
    }
    const Vec2 foot = a + d * t;
    const double dist = distance(p, foot);
    if (dist < best_dist) {
      best_dist = dist;
      const double side = cross(d, p - foot);
      best.arclength = cum[i] + t * (cum[i + 1] - cum[i]);
      best.lateral = side < 0.0 ? -dist : dist;
      best.clamped = clamped;
      best.segment = i;
    }
  }
  return best;
}

}  // namespace closedloop
