#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "closedloop/simulator.hpp"

namespace closedloop {

/// Column layout of a trajectory log, one row per (tick, agent).
inline constexpr const char* kTrajectoryHeader =
    "tick,agent_id,x,y,theta,v,accel,steer,reward,alive,source_tag,infraction";

/// Row t carries the state at tick t, the action taken at t and the reward
/// of the t -> t+1 transition; the final tick has nan action and reward
/// fields. `infraction` describes the state at tick t.
std::string format_trajectory_csv(const Trajectory& traj);
Trajectory parse_trajectory_csv(const std::string& text, const std::string& scenario_id,
                                double dt = kDefaultTickSeconds);

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path, double dt = kDefaultTickSeconds);

/// One `<scenario_id>.csv` per trajectory inside `dir`.
void save_trajectories(const std::filesystem::path& dir, const std::vector<Trajectory>& trajs);
/// All logs in `dir`, sorted by scenario id.
std::vector<Trajectory> load_trajectories(const std::filesystem::path& dir, double dt = kDefaultTickSeconds);

}  // namespace closedloop
