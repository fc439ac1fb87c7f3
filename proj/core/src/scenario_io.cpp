#include <map>

#include <nlohmann/json.hpp>

#include "closedloop/error.hpp"
#include "closedloop/file_util.hpp"
#include "closedloop/scenario.hpp"

namespace closedloop {

namespace {

using nlohmann::json;

json state_to_json(const KinematicState& s) {
  return json::array({s.x, s.y, s.theta, s.v, s.wheelbase, s.box_length, s.box_width});
}

KinematicState state_from_json(const json& j) {
  if (!j.is_array() || j.size() != 7) throw FormatError("kinematic state must be an array of 7 numbers");
  KinematicState s;
  s.x = j[0].get<double>();
  s.y = j[1].get<double>();
  s.theta = j[2].get<double>();
  s.v = j[3].get<double>();
  s.wheelbase = j[4].get<double>();
  s.box_length = j[5].get<double>();
  s.box_width = j[6].get<double>();
  return s;
}

json hero_to_json(const HeroParams& h) {
  return {{"family", to_string(h.family)},
          {"trigger", to_string(h.trigger)},
          {"trigger_distance", h.trigger_distance},
          {"trigger_ttc", h.trigger_ttc},
          {"aggressiveness", h.aggressiveness},
          {"cruise_speed", h.cruise_speed},
          {"target_agent", h.target_agent},
          {"target_lane", h.target_lane}};
}

HeroParams hero_from_json(const json& j) {
  HeroParams h;
  h.family = family_from_string(j.at("family").get<std::string>());
  h.trigger = trigger_from_string(j.at("trigger").get<std::string>());
  h.trigger_distance = j.at("trigger_distance").get<double>();
  h.trigger_ttc = j.at("trigger_ttc").get<double>();
  h.aggressiveness = j.at("aggressiveness").get<double>();
  h.cruise_speed = j.at("cruise_speed").get<double>();
  h.target_agent = j.at("target_agent").get<int>();
  h.target_lane = j.at("target_lane").get<int>();
  return h;
}

json scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["id"] = spec.id;
  j["origin"] = to_string(spec.origin);
  j["family"] = spec.family;
  j["map"] = spec.map_variant;
  // Seeds are written as strings: JSON readers commonly lose 64-bit integers.
  j["seed"] = std::to_string(spec.seed);
  json agents = json::array();
  for (const AgentInit& a : spec.agents) {
    json aj;
    aj["hero"] = a.hero;
    aj["history"] = json::array();
    for (const KinematicState& s : a.history) aj["history"].push_back(state_to_json(s));
    if (a.hero_params) aj["hero_params"] = hero_to_json(*a.hero_params);
    agents.push_back(std::move(aj));
  }
  j["agents"] = std::move(agents);
  if (spec.expert_log) {
    json log;
    log["dt"] = spec.expert_log->dt;
    log["states"] = json::array();
    for (const auto& row : spec.expert_log->states) {
      json r = json::array();
      for (const KinematicState& s : row) r.push_back(state_to_json(s));
      log["states"].push_back(std::move(r));
    }
    log["actions"] = json::array();
    for (const auto& row : spec.expert_log->actions) {
      json r = json::array();
      for (const AgentAction& a : row) r.push_back(json::array({a.accel, a.steer}));
      log["actions"].push_back(std::move(r));
    }
    j["expert_log"] = std::move(log);
  }
  return j;
}

ScenarioSpec scenario_from_json(const json& j, const std::map<int, std::shared_ptr<const LaneGraph>>& maps) {
  ScenarioSpec spec;
  spec.id = j.at("id").get<std::string>();
  spec.origin = origin_from_string(j.at("origin").get<std::string>());
  spec.family = j.at("family").get<std::string>();
  spec.map_variant = j.at("map").get<int>();
  const auto it = maps.find(spec.map_variant);
  if (it == maps.end()) throw FormatError("scenario " + spec.id + " references an undeclared map");
  spec.map = it->second;
  spec.seed = std::stoull(j.at("seed").get<std::string>());
  for (const json& aj : j.at("agents")) {
    AgentInit a;
    a.hero = aj.at("hero").get<bool>();
    for (const json& s : aj.at("history")) a.history.push_back(state_from_json(s));
    if (aj.contains("hero_params")) a.hero_params = hero_from_json(aj.at("hero_params"));
    spec.agents.push_back(std::move(a));
  }
  if (j.contains("expert_log")) {
    const json& lj = j.at("expert_log");
    ExpertTrajectory log;
    log.dt = lj.at("dt").get<double>();
    for (const json& row : lj.at("states")) {
      std::vector<KinematicState> r;
      for (const json& s : row) r.push_back(state_from_json(s));
      log.states.push_back(std::move(r));
    }
    for (const json& row : lj.at("actions")) {
      std::vector<AgentAction> r;
      for (const json& a : row) r.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
      log.actions.push_back(std::move(r));
    }
    spec.expert_log = std::move(log);
  }
  validate_scenario(spec);
  return spec;
}

}  // namespace

void save_scenario_set(const std::filesystem::path& path, const ScenarioSet& set) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  json maps = json::object();
  for (const ScenarioSpec& s : set.scenarios) {
    const std::string key = std::to_string(s.map_variant);
    if (!maps.contains(key)) maps[key] = map_variant(s.map_variant);
  }
  j["maps"] = std::move(maps);
  j["scenarios"] = json::array();
  for (const ScenarioSpec& s : set.scenarios) j["scenarios"].push_back(scenario_to_json(s));
  write_file_atomic(path, j.dump(1));
}

ScenarioSet load_scenario_set(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    const json j = json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kScenarioSchemaVersion) {
      throw FormatError(path.string() + ": scenario schema version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kScenarioSchemaVersion) + ")");
    }
    std::map<int, std::shared_ptr<const LaneGraph>> maps;
    for (const auto& [key, value] : j.at("maps").items()) {
      const int variant = std::stoi(key);
      const MapSpec spec = value.get<MapSpec>();
      if (variant >= 0 && variant < map_variant_count()) {
        maps[variant] = builtin_map(variant);
      } else {
        maps[variant] = std::make_shared<const LaneGraph>(build_lane_graph(spec));
      }
    }
    ScenarioSet set;
    for (const json& s : j.at("scenarios")) set.scenarios.push_back(scenario_from_json(s, maps));
    return set;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed scenario file: " + e.what());
  }
}

}  // namespace closedloop
