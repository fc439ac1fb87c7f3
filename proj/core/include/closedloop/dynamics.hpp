#pragma once

#include <array>

namespace closedloop {

/// Rear-axle kinematic state plus the fixed vehicle shape.
/// Heading is never wrapped inside rollouts.
struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double wheelbase = 3.0;
  double box_length = 4.8;
  double box_width = 1.9;

  std::array<double, 4> pose() const { return {x, y, theta, v}; }
  KinematicState with_pose(const std::array<double, 4>& p) const {
    KinematicState s = *this;
    s.x = p[0], s.y = p[1], s.theta = p[2], s.v = p[3];
    return s;
  }
};

struct AgentAction {
  double accel = 0.0;  // m/s^2
  double steer = 0.0;  // rad, left positive
};

struct ActionBounds {
  double max_accel = 6.0;
  double max_steer = 0.45;

  AgentAction clip(const AgentAction& a) const;
  bool contains(const AgentAction& a) const;
};

inline constexpr double kDefaultTickSeconds = 0.5;

struct StepResult {
  KinematicState state;
  /// Speed would have gone negative and was clamped to zero.
  bool speed_clamped = false;
};

/// Forward-Euler bicycle update. Throws NumericError on non-finite input or
/// |steer| >= pi/2.
StepResult bicycle_step(const KinematicState& s, const AgentAction& a, double dt);

/// Partials of the Euler map, rows (x, y, theta, v), columns (x, y, theta, v)
/// and (accel, steer). The speed row is zeroed when the update clamps.
struct BicycleJacobians {
  std::array<std::array<double, 4>, 4> d_state{};
  std::array<std::array<double, 2>, 4> d_action{};
};

BicycleJacobians bicycle_jacobians(const KinematicState& s, const AgentAction& a, double dt);

}  // namespace closedloop
