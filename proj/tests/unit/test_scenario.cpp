#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "closedloop/error.hpp"
#include "closedloop/file_util.hpp"
#include "closedloop/scenario.hpp"
#include "closedloop/simulator.hpp"

using namespace closedloop;

namespace {

KinematicState at(double x, double y, double v) {
  KinematicState s;
  s.x = x, s.y = y, s.v = v;
  return s;
}

AgentSlot slot(const KinematicState& s, int history = 3) {
  AgentSlot a;
  a.history.assign(static_cast<std::size_t>(history), s);
  return a;
}

SceneState straight_scene(std::vector<AgentSlot> agents) {
  SceneState scene;
  scene.map = builtin_map(0);
  scene.agents = std::move(agents);
  scene.history_length = static_cast<int>(scene.agents.front().history.size());
  return scene;
}

double idm_by_hand(double v, double v0, double s, double dv, double a, double b, double s0, double T) {
  const double s_star = s0 + v * T + v * dv / (2.0 * std::sqrt(a * b));
  return a * (1.0 - std::pow(v / v0, 4.0) - (s_star / s) * (s_star / s));
}

std::string file_bytes(const ScenarioSpec& spec) {
  const auto path = std::filesystem::temp_directory_path() / ("closedloop_spec_" + spec.id + ".json");
  save_scenario_set(path, ScenarioSet{{spec}});
  std::string out = read_file(path);
  std::filesystem::remove(path);
  return out;
}

}  // namespace

TEST_CASE("idm_acceleration") {
  const OracleConfig cfg;
  CHECK(idm_acceleration(30.0, 30.0, std::nullopt, 0.0, cfg) == doctest::Approx(0.0));
  CHECK(idm_acceleration(0.0, 30.0, std::nullopt, 0.0, cfg) == doctest::Approx(cfg.max_accel));
  const double expected = idm_by_hand(20, 30, 40, 0, 1.5, 2, 2, 1.5);
  CHECK(expected == doctest::Approx(0.243703).epsilon(1e-5));
  CHECK(idm_acceleration(20.0, 30.0, 40.0, 0.0, cfg) == doctest::Approx(expected));
  CHECK(idm_acceleration(20.0, 30.0, 25.0, 3.0, cfg) ==
        doctest::Approx(idm_by_hand(20, 30, 25, 3, 1.5, 2, 2, 1.5)));
}

TEST_CASE("expert_oracle_action on a free road") {
  const ActionBounds bounds;
  const OracleConfig cfg;
  // The right lane has a 20 m/s limit.
  auto cruising = straight_scene({slot(at(0.0, 0.0, 20.0))});
  const AgentAction a = expert_oracle_action(0, cruising, cfg, bounds);
  CHECK(a.accel == doctest::Approx(0.0));
  CHECK(a.steer == doctest::Approx(0.0));
  auto resting = straight_scene({slot(at(0.0, 0.0, 0.0))});
  CHECK(expert_oracle_action(0, resting, cfg, bounds).accel == doctest::Approx(cfg.max_accel));
  // Offset to the right of the lane: steer back left.
  auto offset = straight_scene({slot(at(0.0, -0.8, 20.0))});
  CHECK(expert_oracle_action(0, offset, cfg, bounds).steer > 0.0);
}

TEST_CASE("hero scripts") {
  const ActionBounds bounds;
  HeroParams p;
  p.cruise_speed = 20.0;
  p.target_agent = 0;
  p.trigger_distance = 10.0;

  SUBCASE("speed hold before the trigger") {
    for (ScenarioFamily fam : {ScenarioFamily::hard_brake, ScenarioFamily::cut_in}) {
      p.family = fam;
      p.target_lane = fam == ScenarioFamily::cut_in ? 1 : -1;
      AgentSlot hero = slot(at(100.0, 0.0, 20.0));
      hero.hero = true;
      hero.hero_params = p;
      auto scene = straight_scene({slot(at(0.0, 0.0, 20.0)), hero});
      const auto d = hero_action(1, scene, p, 0, bounds);
      CHECK_FALSE(d.triggered);
      CHECK(d.action.accel == doctest::Approx(0.0));
    }
  }
  SUBCASE("hard brake after the trigger") {
    p.family = ScenarioFamily::hard_brake;
    p.aggressiveness = 1.0;
    AgentSlot hero = slot(at(30.0, 0.0, 20.0));
    hero.hero = true;
    hero.hero_params = p;
    hero.hero_triggered = true;
    auto scene = straight_scene({slot(at(0.0, 0.0, 20.0)), hero});
    CHECK(hero_action(1, scene, p, 5, bounds).action.accel == doctest::Approx(-6.0));
    p.aggressiveness = 0.25;
    CHECK(hero_action(1, scene, p, 5, bounds).action.accel == doctest::Approx(-3.0));
  }
  SUBCASE("the trigger fires inside the trigger distance") {
    p.family = ScenarioFamily::hard_brake;
    AgentSlot hero = slot(at(12.0, 0.0, 20.0));
    hero.hero = true;
    hero.hero_params = p;
    auto scene = straight_scene({slot(at(0.0, 0.0, 20.0)), hero});
    CHECK(hero_action(1, scene, p, 0, bounds).triggered);
  }
  SUBCASE("cut-in from the right lane steers left") {
    p.family = ScenarioFamily::cut_in;
    p.target_lane = 1;
    AgentSlot hero = slot(at(30.0, 0.0, 20.0));
    hero.hero = true;
    hero.hero_params = p;
    hero.hero_triggered = true;
    auto scene = straight_scene({slot(at(0.0, 3.7, 20.0)), hero});
    CHECK(hero_action(1, scene, p, 3, bounds).action.steer > 0.0);
  }
  SUBCASE("non-heroes are rejected") {
    auto scene = straight_scene({slot(at(0.0, 0.0, 20.0))});
    CHECK_THROWS_AS(hero_action(0, scene, p, 0, bounds), ScenarioError);
  }
}

TEST_CASE("concrete scenarios respect their logical ranges") {
  for (ScenarioFamily fam : {ScenarioFamily::cut_in, ScenarioFamily::hard_brake, ScenarioFamily::merge}) {
    const LogicalScenario logical = default_logical_scenario(fam);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const ScenarioSpec spec = sample_concrete_scenario(logical, seed);
      CHECK_NOTHROW(validate_scenario(spec));
      CHECK(spec.origin == ScenarioOrigin::long_tail);
      CHECK_FALSE(spec.expert_log.has_value());
      int heroes = 0;
      for (const AgentInit& a : spec.agents) {
        CHECK(a.hero == a.hero_params.has_value());
        if (!a.hero) continue;
        ++heroes;
        CHECK(logical.trigger_distance.contains(a.hero_params->trigger_distance));
        CHECK(logical.trigger_ttc.contains(a.hero_params->trigger_ttc));
        CHECK(logical.aggressiveness.contains(a.hero_params->aggressiveness));
        CHECK(logical.hero_speed.contains(a.hero_params->cruise_speed));
      }
      CHECK(heroes == logical.hero_count);
    }
  }
}

TEST_CASE("concrete scenarios are a pure function of the seed") {
  const LogicalScenario logical = default_logical_scenario(ScenarioFamily::cut_in);
  CHECK(file_bytes(sample_concrete_scenario(logical, 5)) == file_bytes(sample_concrete_scenario(logical, 5)));
  CHECK(file_bytes(sample_concrete_scenario(logical, 5)) != file_bytes(sample_concrete_scenario(logical, 6)));
}

TEST_CASE("parameters are drawn uniformly") {
  const LogicalScenario logical = default_logical_scenario(ScenarioFamily::hard_brake);
  const ParamRange r = logical.aggressiveness;
  double sum = 0.0;
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    const ScenarioSpec spec = sample_concrete_scenario(logical, static_cast<std::uint64_t>(k));
    for (const AgentInit& a : spec.agents) {
      if (a.hero) sum += a.hero_params->aggressiveness;
    }
  }
  const double se = (r.hi - r.lo) / std::sqrt(12.0 * n);
  CHECK(std::abs(sum / n - 0.5 * (r.lo + r.hi)) < 3.0 * se);
}

TEST_CASE("sampling gives up after the retry budget") {
  LogicalScenario impossible = default_logical_scenario(ScenarioFamily::hard_brake);
  impossible.initial_gap = {-4.0, -3.0};
  CHECK_THROWS_AS(sample_concrete_scenario(impossible, 1), ScenarioError);
  LogicalScenario bad = default_logical_scenario(ScenarioFamily::hard_brake);
  bad.trigger_distance = {5.0, 1.0};
  CHECK_THROWS_AS(sample_concrete_scenario(bad, 1), ScenarioError);
}

TEST_CASE("nominal expert logs replay exactly and stay clean") {
  NominalConfig nc;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ScenarioSpec spec = generate_nominal_scenario(nc, static_cast<int>(seed % 2), seed);
    CHECK_NOTHROW(validate_scenario(spec));
    REQUIRE(spec.expert_log);
    const ExpertTrajectory& log = *spec.expert_log;
    CHECK(log.ticks() == nc.log_ticks);
    CHECK(spec.history_length() == nc.history);
    for (int t = 0; t < log.ticks(); ++t) {
      for (std::size_t i = 0; i < log.states[0].size(); ++i) {
        const KinematicState next = bicycle_step(log.states[t][i], log.actions[t][i], log.dt).state;
        const KinematicState& rec = log.states[t + 1][i];
        CHECK(std::abs(next.x - rec.x) < 1e-9);
        CHECK(std::abs(next.y - rec.y) < 1e-9);
        CHECK(std::abs(next.theta - rec.theta) < 1e-9);
        CHECK(std::abs(next.v - rec.v) < 1e-9);
      }
    }
    for (const auto& states : log.states) {
      for (Infraction f : detect_infractions(*spec.map, states, {})) CHECK(f == Infraction::none);
    }
  }
}

TEST_CASE("validate_scenario catches broken invariants") {
  const ScenarioSpec good = generate_nominal_scenario(NominalConfig{}, 0, 3);
  ScenarioSpec no_log = good;
  no_log.expert_log.reset();
  CHECK_THROWS_AS(validate_scenario(no_log), ScenarioError);
  ScenarioSpec flagged = good;
  flagged.agents[0].hero = true;
  CHECK_THROWS_AS(validate_scenario(flagged), ScenarioError);
  ScenarioSpec stacked = good;
  stacked.agents.push_back(stacked.agents[0]);
  CHECK_THROWS_AS(validate_scenario(stacked), ScenarioError);
}

TEST_CASE("sample_initial_state mixes the two sets") {
  const std::vector<ScenarioSpec> nominal{generate_nominal_scenario(NominalConfig{}, 0, 1)};
  const std::vector<ScenarioSpec> longtail{sample_concrete_scenario(default_logical_scenario(ScenarioFamily::cut_in), 1)};
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    CHECK(sample_initial_state(0.0, nominal, longtail, rng).origin == ScenarioOrigin::nominal);
    CHECK(sample_initial_state(1.0, nominal, longtail, rng).origin == ScenarioOrigin::long_tail);
  }
  int tail = 0;
  for (int k = 0; k < 10000; ++k) tail += sample_initial_state(0.5, nominal, longtail, rng).origin == ScenarioOrigin::long_tail;
  CHECK(tail >= 4800);
  CHECK(tail <= 5200);
  CHECK_THROWS_AS(sample_initial_state(1.5, nominal, longtail, rng), ScenarioError);
  CHECK_NOTHROW(sample_initial_state(0.0, nominal, {}, rng));
  CHECK_THROWS_AS(sample_initial_state(1.0, nominal, {}, rng), ScenarioError);
}

TEST_CASE("scenario sets round-trip through disk") {
  const auto dir = std::filesystem::temp_directory_path() / "closedloop_scenario_io";
  std::filesystem::create_directories(dir);
  ScenarioSet set;
  set.scenarios.push_back(generate_nominal_scenario(NominalConfig{}, 1, 8));
  set.scenarios.back().id = "nom";
  set.scenarios.push_back(sample_concrete_scenario(default_logical_scenario(ScenarioFamily::merge), 8));
  set.scenarios.back().id = "tail";
  save_scenario_set(dir / "a.json", set);
  const ScenarioSet back = load_scenario_set(dir / "a.json");
  REQUIRE(back.scenarios.size() == 2);
  CHECK(back.scenarios[0].expert_log->states.back()[0].x == set.scenarios[0].expert_log->states.back()[0].x);
  CHECK(back.scenarios[1].agents[1].hero_params->aggressiveness ==
        set.scenarios[1].agents[1].hero_params->aggressiveness);
  save_scenario_set(dir / "b.json", back);
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));

  auto j = nlohmann::json::parse(read_file(dir / "a.json"));
  j["schema_version"] = kScenarioSchemaVersion + 1;
  write_file_atomic(dir / "c.json", j.dump());
  CHECK_THROWS_AS(load_scenario_set(dir / "c.json"), FormatError);
  write_file_atomic(dir / "d.json", "{\"schema_version\": 1}");
  CHECK_THROWS_AS(load_scenario_set(dir / "d.json"), FormatError);
  std::filesystem::remove_all(dir);
}
