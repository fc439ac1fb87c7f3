#include "closedloop/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "closedloop/error.hpp"

namespace closedloop {

AgentAction ActionBounds::clip(const AgentAction& a) const {
  return {std::clamp(a.accel, -max_accel, max_accel), std::clamp(a.steer, -max_steer, max_steer)};
}

bool ActionBounds::contains(const AgentAction& a) const {
  return std::abs(a.accel) <= max_accel && std::abs(a.steer) <= max_steer;
}

namespace {

void check_inputs(const KinematicState& s, const AgentAction& a, double dt) {
  const bool finite = std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta) && std::isfinite(s.v) &&
                      std::isfinite(a.accel) && std::isfinite(a.steer) && std::isfinite(dt);
  if (!finite) throw NumericError("bicycle model received a non-finite input");
  if (!(dt > 0.0)) throw NumericError("bicycle model needs dt > 0");
  if (!(s.wheelbase > 0.0)) throw NumericError("bicycle model needs a positive wheelbase");
  if (std::abs(a.steer) >= 0.5 * M_PI) throw NumericError("steering angle at or beyond pi/2");
}

}  // namespace

StepResult bicycle_step(const KinematicState& s, const AgentAction& a, double dt) {
  check_inputs(s, a, dt);
  StepResult r;
  r.state = s;
  r.state.x = s.x + s.v * std::cos(s.theta) * dt;
  r.state.y = s.y + s.v * std::sin(s.theta) * dt;
  r.state.theta = s.theta + s.v / s.wheelbase * std::tan(a.steer) * dt;
  r.state.v = s.v + a.accel * dt;
  if (r.state.v < 0.0) {
    r.state.v = 0.0;
    r.speed_clamped = true;
  }
  return r;
}

BicycleJacobians bicycle_jacobians(const KinematicState& s, const AgentAction& a, double dt) {
  check_inputs(s, a, dt);
  BicycleJacobians j;
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const double tan_phi = std::tan(a.steer);
  const double cos_phi = std::cos(a.steer);

  j.d_state[0] = {1.0, 0.0, -s.v * sn * dt, c * dt};
  j.d_state[1] = {0.0, 1.0, s.v * c * dt, sn * dt};
  j.d_state[2] = {0.0, 0.0, 1.0, tan_phi * dt / s.wheelbase};
  j.d_state[3] = {0.0, 0.0, 0.0, 1.0};

  j.d_action[0] = {0.0, 0.0};
  j.d_action[1] = {0.0, 0.0};
  j.d_action[2] = {0.0, s.v * dt / (s.wheelbase * cos_phi * cos_phi)};
  j.d_action[3] = {dt, 0.0};

  if (s.v + a.accel * dt < 0.0) {
    j.d_state[3] = {0.0, 0.0, 0.0, 0.0};
    j.d_action[3] = {0.0, 0.0};
  }
  return j;
}

}  // namespace closedloop
