#include "closedloop/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include "closedloop/error.hpp"
#include "closedloop/file_util.hpp"

namespace closedloop {

namespace {

void append_number(std::string& out, double x) {
  if (std::isnan(x)) {
    out += "nan";
    return;
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, r.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw FormatError("bad number '" + s + "' in trajectory log");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "' in trajectory log");
  return v;
}

}  // namespace

std::string format_trajectory_csv(const Trajectory& traj) {
  std::string out = kTrajectoryHeader;
  out += '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const int n = traj.agent_count();
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    const bool has_action = t < traj.actions.size();
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const KinematicState& s = traj.states[t][ui];
      out += std::to_string(t);
      out += ',';
      out += std::to_string(i);
      for (double x : {s.x, s.y, s.theta, s.v, has_action ? traj.actions[t][ui].accel : nan,
                       has_action ? traj.actions[t][ui].steer : nan, has_action ? traj.rewards[t][ui] : nan}) {
        out += ',';
        append_number(out, x);
      }
      out += ",1,";
      out += to_string(traj.sources[ui]);
      out += ',';
      out += to_string(t == 0 ? Infraction::none : traj.infractions[t - 1][ui]);
      out += '\n';
    }
  }
  return out;
}

Trajectory parse_trajectory_csv(const std::string& text, const std::string& scenario_id, double dt) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trajectory log is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw FormatError("trajectory log has an unexpected header: " + line);

  struct Row {
    KinematicState state;
    AgentAction action;
    double reward = 0.0;
    ActionSource source = ActionSource::learner;
    Infraction infraction = Infraction::none;
  };
  std::map<int, std::map<int, Row>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != 12) throw FormatError("trajectory log row has " + std::to_string(f.size()) + " fields");
    Row r;
    r.state.x = parse_double(f[2]);
    r.state.y = parse_double(f[3]);
    r.state.theta = parse_double(f[4]);
    r.state.v = parse_double(f[5]);
    r.action = {parse_double(f[6]), parse_double(f[7])};
    r.reward = parse_double(f[8]);
    r.source = source_from_string(f[10]);
    r.infraction = infraction_from_string(f[11]);
    rows[parse_int(f[0])][parse_int(f[1])] = r;
  }
  if (rows.empty()) throw FormatError("trajectory log has no rows");

  Trajectory traj;
  traj.scenario_id = scenario_id;
  traj.dt = dt;
  const std::size_t n = rows.begin()->second.size();
  int expected_tick = 0;
  for (const auto& [tick, agents] : rows) {
    if (tick != expected_tick++) throw FormatError("trajectory log skips a tick");
    if (agents.size() != n || agents.rbegin()->first != static_cast<int>(n) - 1) {
      throw FormatError("trajectory log has inconsistent agent rows at tick " + std::to_string(tick));
    }
    std::vector<KinematicState> states;
    std::vector<AgentAction> actions;
    std::vector<double> rewards;
    std::vector<Infraction> infractions;
    for (const auto& [agent, r] : agents) {
      states.push_back(r.state);
      actions.push_back(r.action);
      rewards.push_back(r.reward);
      infractions.push_back(r.infraction);
      if (tick == 0) traj.sources.push_back(r.source);
    }
    traj.states.push_back(std::move(states));
    if (tick > 0) traj.infractions.push_back(std::move(infractions));
    const bool last = tick == rows.rbegin()->first;
    if (!last) {
      traj.actions.push_back(actions);
      traj.raw_actions.push_back(std::move(actions));
      traj.rewards.push_back(std::move(rewards));
      traj.log_probs.emplace_back(n, 0.0);
    }
  }
  return traj;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  write_file_atomic(path, format_trajectory_csv(traj));
}

Trajectory load_trajectory(const std::filesystem::path& path, double dt) {
  return parse_trajectory_csv(read_file(path), path.stem().string(), dt);
}

void save_trajectories(const std::filesystem::path& dir, const std::vector<Trajectory>& trajs) {
  std::filesystem::create_directories(dir);
  for (const Trajectory& t : trajs) {
    if (t.scenario_id.empty()) throw Error("cannot save a trajectory without a scenario id");
    save_trajectory(dir / (t.scenario_id + ".csv"), t);
  }
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& dir, double dt) {
  if (!std::filesystem::is_directory(dir)) throw FormatError(dir.string() + " is not a trajectory directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Trajectory> out;
  for (const auto& f : files) out.push_back(load_trajectory(f, dt));
  return out;
}

}  // namespace closedloop
