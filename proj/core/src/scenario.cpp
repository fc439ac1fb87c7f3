#include "closedloop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "closedloop/error.hpp"
#include "closedloop/simulator.hpp"

namespace closedloop {

std::string to_string(ScenarioOrigin o) { return o == ScenarioOrigin::nominal ? "nominal" : "long_tail"; }

ScenarioOrigin origin_from_string(const std::string& s) {
  if (s == "nominal") return ScenarioOrigin::nominal;
  if (s == "long_tail") return ScenarioOrigin::long_tail;
  throw ScenarioError("unknown scenario origin '" + s + "'");
}

void LogicalScenario::validate() const {
  const ParamRange* ranges[] = {&trigger_distance, &trigger_ttc,  &aggressiveness, &hero_speed,
                                &follower_speed,   &initial_gap,  &map_variant,    &extra_agents};
  for (const ParamRange* r : ranges) {
    if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
      throw ScenarioError("logical scenario has an empty parameter range");
    }
  }
  if (aggressiveness.lo < 0.0 || aggressiveness.hi > 1.0) throw ScenarioError("aggressiveness must lie in [0, 1]");
  if (hero_count < 1) throw ScenarioError("logical scenario needs at least one hero");
  if (map_variant.lo < 0 || map_variant.hi >= map_variant_count()) throw ScenarioError("unknown map variant range");
}

LogicalScenario default_logical_scenario(ScenarioFamily family) {
  LogicalScenario l;
  l.family = family;
  l.trigger = TriggerKind::distance;
  switch (family) {
    case ScenarioFamily::cut_in:
      l.trigger_distance = {6.0, 14.0};
      l.aggressiveness = {0.5, 1.0};
      l.hero_speed = {10.0, 15.0};
      l.follower_speed = {18.0, 23.0};
      l.initial_gap = {18.0, 30.0};
      l.map_variant = {0.0, 1.0};
      break;
    case ScenarioFamily::hard_brake:
      l.trigger_distance = {8.0, 16.0};
      l.aggressiveness = {0.6, 1.0};
      l.hero_speed = {16.0, 20.0};
      l.follower_speed = {19.0, 24.0};
      l.initial_gap = {14.0, 24.0};
      l.map_variant = {0.0, 1.0};
      break;
    case ScenarioFamily::merge:
      l.trigger_distance = {6.0, 14.0};
      l.aggressiveness = {0.5, 1.0};
      l.hero_speed = {10.0, 15.0};
      l.follower_speed = {17.0, 21.0};
      l.initial_gap = {16.0, 28.0};
      l.map_variant = {1.0, 1.0};
      break;
  }
  return l;
}

void validate_scenario(const ScenarioSpec& spec) {
  if (!spec.map) throw ScenarioError("scenario " + spec.id + " has no map");
  if (spec.agents.empty()) throw ScenarioError("scenario " + spec.id + " has no agents");
  const std::size_t hist = spec.agents.front().history.size();
  if (hist == 0) throw ScenarioError("scenario " + spec.id + " has empty agent history");
  for (const AgentInit& a : spec.agents) {
    if (a.history.size() != hist) throw ScenarioError("scenario " + spec.id + " has ragged histories");
    if (a.hero != a.hero_params.has_value()) {
      throw ScenarioError("scenario " + spec.id + ": hero flags and hero params disagree");
    }
    if (a.hero_params && (a.hero_params->target_agent < 0 || a.hero_params->target_agent >= spec.agent_count())) {
      throw ScenarioError("scenario " + spec.id + ": hero target agent out of range");
    }
  }
  if ((spec.origin == ScenarioOrigin::nominal) != spec.expert_log.has_value()) {
    throw ScenarioError("scenario " + spec.id + ": nominal scenarios carry an expert log, long-tail ones do not");
  }
  std::vector<KinematicState> current;
  for (const AgentInit& a : spec.agents) current.push_back(a.history.front());
  const auto flags = detect_infractions(*spec.map, current, {});
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] != Infraction::none) {
      throw ScenarioError("scenario " + spec.id + ": initial placement of agent " + std::to_string(i) + " is " +
                          to_string(flags[i]));
    }
  }
  if (spec.expert_log) {
    const ExpertTrajectory& log = *spec.expert_log;
    if (log.states.size() != log.actions.size() + 1) throw ScenarioError("expert log length mismatch");
    for (const auto& row : log.states) {
      if (row.size() != spec.agents.size()) throw ScenarioError("expert log agent count mismatch");
    }
  }
}

SceneState initial_scene(const ScenarioSpec& spec) {
  SceneState scene;
  scene.map = spec.map;
  scene.tick = 0;
  scene.history_length = spec.history_length();
  for (const AgentInit& a : spec.agents) {
    AgentSlot slot;
    slot.history = a.history;
    slot.hero = a.hero;
    slot.hero_params = a.hero_params;
    scene.agents.push_back(std::move(slot));
  }
  return scene;
}

std::shared_ptr<const LaneGraph> builtin_map(int variant) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const LaneGraph>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(variant);
  if (it != cache.end()) return it->second;
  auto g = std::make_shared<const LaneGraph>(build_lane_graph(map_variant(variant)));
  cache.emplace(variant, g);
  return g;
}

double idm_acceleration(double v, double v_desired, std::optional<double> gap, double closing_speed,
                        const OracleConfig& cfg) {
  double u = cfg.max_accel * (1.0 - std::pow(std::max(v, 0.0) / v_desired, cfg.exponent));
  if (gap) {
    const double dynamic = v * cfg.headway + v * closing_speed / (2.0 * std::sqrt(cfg.max_accel * cfg.comfortable_decel));
    const double desired = cfg.min_gap + std::max(0.0, dynamic);
    const double s = std::max(*gap, 0.1);
    u -= cfg.max_accel * (desired / s) * (desired / s);
  }
  return u;
}

double pure_pursuit_steer(const KinematicState& s, const LaneGraph& map, int lane, double lookahead) {
  const Lane& l = map.lanes().at(static_cast<std::size_t>(lane));
  const PolylineProjection proj = project_onto_polyline({s.x, s.y}, l.centerline);
  const Vec2 target = l.centerline.point_at(proj.arclength + lookahead);
  const Vec2 d = target - Vec2{s.x, s.y};
  const double dist = norm(d);
  if (dist < 1e-6) return 0.0;
  const double alpha = wrap_angle(std::atan2(d.y, d.x) - s.theta);
  return std::atan(2.0 * s.wheelbase * std::sin(alpha) / dist);
}

AgentAction expert_oracle_action(int agent, const SceneState& scene, const OracleConfig& cfg,
                                 const ActionBounds& bounds, double dt) {
  const KinematicState& me = scene.agents.at(static_cast<std::size_t>(agent)).state();
  const auto loc = scene.map->locate(box_center(me));
  if (!loc) return {};
  const double v_desired = scene.map->nodes()[static_cast<std::size_t>(loc->node)].speed_limit;

  const auto states = scene.current_states();
  std::vector<std::uint8_t> alive;
  for (const AgentSlot& a : scene.agents) alive.push_back(a.alive ? 1 : 0);
  const auto lead = find_lead(*scene.map, states, alive, agent, cfg.lead_range);
  std::optional<double> gap;
  double closing = 0.0;
  if (lead) {
    gap = lead->gap;
    closing = me.v - lead->speed;
  }
  AgentAction a;
  a.accel = idm_acceleration(me.v, v_desired, gap, closing, cfg);
  const double lookahead = std::max(cfg.min_lookahead, cfg.lookahead_ticks * me.v * dt);
  a.steer = pure_pursuit_steer(me, *scene.map, loc->lane, lookahead);
  return bounds.clip(a);
}

namespace {

// Along-lane gap from target to hero (hero ahead positive), bumper to bumper.
double hero_gap(const LaneGraph& map, int lane, const KinematicState& hero, const KinematicState& target) {
  const Polyline& line = map.lanes()[static_cast<std::size_t>(lane)].centerline;
  const double sh = project_onto_polyline(box_center(hero), line).arclength;
  const double st = project_onto_polyline(box_center(target), line).arclength;
  return sh - st - 0.5 * (hero.box_length + target.box_length);
}

constexpr double kSpeedHoldGain = 1.0;

}  // namespace

HeroDecision hero_action(int hero_index, const SceneState& scene, const HeroParams& params, int /*tick*/,
                         const ActionBounds& bounds, double dt) {
  const AgentSlot& slot = scene.agents.at(static_cast<std::size_t>(hero_index));
  if (!slot.hero) throw ScenarioError("hero_action called for a non-hero agent");
  HeroDecision out;
  out.triggered = slot.hero_triggered;
  const KinematicState& me = slot.state();
  const auto loc = scene.map->locate(box_center(me));
  if (!loc) return out;

  const KinematicState& target = scene.agents.at(static_cast<std::size_t>(params.target_agent)).state();
  if (!out.triggered) {
    const double gap = hero_gap(*scene.map, loc->lane, me, target);
    if (params.trigger == TriggerKind::distance) {
      out.triggered = gap < params.trigger_distance;
    } else {
      const double closing = target.v - me.v;
      out.triggered = gap <= 0.0 || (closing > 0.0 && gap / closing < params.trigger_ttc);
    }
  }

  const double hold = kSpeedHoldGain * (params.cruise_speed - me.v);
  const double cruise_lookahead = std::max(6.0, 2.5 * me.v * dt);
  AgentAction a{hold, pure_pursuit_steer(me, *scene.map, loc->lane, cruise_lookahead)};
  if (out.triggered) {
    switch (params.family) {
      case ScenarioFamily::hard_brake:
        a.accel = me.v > 0.0 ? -(2.0 + 4.0 * params.aggressiveness) : 0.0;
        break;
      case ScenarioFamily::cut_in:
      case ScenarioFamily::merge:
        if (params.target_lane >= 0) {
          // Shorter lookahead for aggressive heroes gives a faster lateral move.
          const double rate = 0.2 + 0.3 * params.aggressiveness;
          const double lookahead = std::max(4.0, me.v * dt / rate);
          a.steer = pure_pursuit_steer(me, *scene.map, params.target_lane, lookahead);
        }
        break;
    }
  }
  out.action = bounds.clip(a);
  return out;
}

namespace {

// States at ticks 0, -1, ..., -(H-1) by constant-velocity extrapolation.
std::vector<KinematicState> backfill_history(const KinematicState& s, int history, double dt) {
  std::vector<KinematicState> h;
  for (int lag = 0; lag < history; ++lag) {
    KinematicState p = s;
    p.x = s.x - lag * dt * s.v * std::cos(s.theta);
    p.y = s.y - lag * dt * s.v * std::sin(s.theta);
    h.push_back(p);
  }
  return h;
}

// Rear-axle state whose box center sits at `center_s` along `lane`.
KinematicState place_on_lane(const LaneGraph& map, int lane, double center_s, double v, double lateral = 0.0,
                             double heading_offset = 0.0) {
  const Lane& l = map.lanes()[static_cast<std::size_t>(lane)];
  KinematicState s;
  const double heading = l.centerline.heading_at(center_s);
  const Vec2 c = l.centerline.point_at(center_s) + Vec2{-std::sin(heading), std::cos(heading)} * lateral;
  s.theta = heading + heading_offset;
  const Vec2 rear = c - unit_heading(s.theta) * (0.5 * s.wheelbase);
  s.x = rear.x;
  s.y = rear.y;
  s.v = v;
  return s;
}

int lane_index(const LaneGraph& map, const std::string& id) {
  for (std::size_t i = 0; i < map.lanes().size(); ++i) {
    if (map.lanes()[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

bool placement_ok(const LaneGraph& map, const std::vector<KinematicState>& states) {
  const auto flags = detect_infractions(map, states, {});
  return std::all_of(flags.begin(), flags.end(), [](Infraction f) { return f == Infraction::none; });
}

int draw_int(Rng& rng, const ParamRange& r) {
  return rng.uniform_int(static_cast<int>(std::ceil(r.lo)), static_cast<int>(std::floor(r.hi)));
}

}  // namespace

ScenarioSpec generate_nominal_scenario(const NominalConfig& cfg, int map_variant, std::uint64_t seed,
                                       const OracleConfig& oracle, const ActionBounds& bounds) {
  Rng rng(seed);
  auto map = builtin_map(map_variant);
  const int main_lanes[] = {lane_index(*map, "right"), lane_index(*map, "left")};
  const int warmup = cfg.history - 1;

  for (int attempt = 0; attempt < kGenerationRetryBudget; ++attempt) {
    std::vector<KinematicState> start;
    for (int lane : main_lanes) {
      const Lane& l = map->lanes()[static_cast<std::size_t>(lane)];
      const int count = draw_int(rng, cfg.agents_per_lane);
      // Lane arclength measured from the map start at x = -300.
      double s = 200.0 + rng.uniform(0.0, 30.0);
      for (int k = 0; k < count; ++k) {
        const double v = l.speed_limit + rng.uniform(cfg.speed_offset.lo, cfg.speed_offset.hi);
        start.push_back(place_on_lane(*map, lane, s, v, rng.uniform(-cfg.lateral_noise, cfg.lateral_noise),
                                      rng.uniform(-cfg.heading_noise, cfg.heading_noise)));
        s += rng.uniform(cfg.lane_gap.lo, cfg.lane_gap.hi) + start.back().box_length;
      }
    }
    if (start.empty() || !placement_ok(*map, start)) continue;

    SceneState scene;
    scene.map = map;
    scene.history_length = cfg.history;
    for (const KinematicState& s : start) {
      AgentSlot slot;
      slot.history = backfill_history(s, cfg.history, cfg.dt);
      scene.agents.push_back(std::move(slot));
    }

    std::vector<std::vector<KinematicState>> states{start};
    std::vector<std::vector<AgentAction>> actions;
    bool clean = true;
    for (int t = 0; t < warmup + cfg.log_ticks && clean; ++t) {
      std::vector<AgentAction> joint;
      for (int i = 0; i < scene.agent_count(); ++i) {
        joint.push_back(expert_oracle_action(i, scene, oracle, bounds, cfg.dt));
      }
      StepOutcome step = step_scene(scene, joint, cfg.dt);
      for (Infraction f : step.infractions) clean = clean && f == Infraction::none;
      scene = std::move(step.next);
      actions.push_back(joint);
      states.push_back(scene.current_states());
    }
    if (!clean) continue;

    ScenarioSpec spec;
    spec.id = "nominal-" + std::to_string(seed);
    spec.origin = ScenarioOrigin::nominal;
    spec.family = "nominal";
    spec.map_variant = map_variant;
    spec.map = map;
    spec.seed = seed;
    for (std::size_t i = 0; i < start.size(); ++i) {
      AgentInit init;
      for (int lag = 0; lag < cfg.history; ++lag) {
        init.history.push_back(states[static_cast<std::size_t>(warmup - lag)][i]);
      }
      spec.agents.push_back(std::move(init));
    }
    ExpertTrajectory log;
    log.dt = cfg.dt;
    log.states.assign(states.begin() + warmup, states.end());
    log.actions.assign(actions.begin() + warmup, actions.end());
    spec.expert_log = std::move(log);
    validate_scenario(spec);
    return spec;
  }
  throw ScenarioError("nominal scenario generation exhausted its retry budget (seed " + std::to_string(seed) + ")");
}

ScenarioSpec sample_concrete_scenario(const LogicalScenario& logical, std::uint64_t seed, const LongTailConfig& cfg) {
  logical.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < kGenerationRetryBudget; ++attempt) {
    HeroParams hero;
    hero.family = logical.family;
    hero.trigger = logical.trigger;
    hero.trigger_distance = rng.uniform(logical.trigger_distance.lo, logical.trigger_distance.hi);
    hero.trigger_ttc = rng.uniform(logical.trigger_ttc.lo, logical.trigger_ttc.hi);
    hero.aggressiveness = rng.uniform(logical.aggressiveness.lo, logical.aggressiveness.hi);
    hero.cruise_speed = rng.uniform(logical.hero_speed.lo, logical.hero_speed.hi);
    const double follower_speed = rng.uniform(logical.follower_speed.lo, logical.follower_speed.hi);
    const double gap = rng.uniform(logical.initial_gap.lo, logical.initial_gap.hi);
    const int variant = draw_int(rng, logical.map_variant);
    const int extras = draw_int(rng, logical.extra_agents);

    auto map = builtin_map(variant);
    const int right = lane_index(*map, "right");
    const int left = lane_index(*map, "left");
    const int ramp = lane_index(*map, "ramp");

    int follower_lane = right;
    int hero_lane = right;
    switch (logical.family) {
      case ScenarioFamily::hard_brake:
        follower_lane = hero_lane = rng.bernoulli(0.5) ? right : left;
        break;
      case ScenarioFamily::cut_in:
        follower_lane = rng.bernoulli(0.5) ? right : left;
        hero_lane = follower_lane == right ? left : right;
        hero.target_lane = follower_lane;
        break;
      case ScenarioFamily::merge:
        if (ramp < 0) throw ScenarioError("merge scenarios need a map with an on-ramp");
        follower_lane = right;
        hero_lane = ramp;
        hero.target_lane = right;
        break;
    }
    hero.target_agent = 0;

    std::vector<KinematicState> states;
    const double follower_s = 290.0 + rng.uniform(-10.0, 10.0);
    states.push_back(place_on_lane(*map, follower_lane, follower_s, follower_speed));
    const double hero_s = follower_s + gap + states.back().box_length;
    states.push_back(place_on_lane(*map, hero_lane, hero_s, hero.cruise_speed));

    const int other_lane = follower_lane == right ? left : right;
    for (int k = 0; k < extras; ++k) {
      const double v = rng.uniform(follower_speed - 3.0, follower_speed + 1.0);
      if (rng.bernoulli(0.5)) {
        const double s = follower_s - rng.uniform(22.0, 40.0) - 10.0 * k;
        states.push_back(place_on_lane(*map, follower_lane, s, v));
      } else {
        const double s = follower_s + rng.uniform(-35.0, 10.0);
        states.push_back(place_on_lane(*map, other_lane == hero_lane ? follower_lane : other_lane, s, v));
      }
    }
    if (!placement_ok(*map, states)) continue;

    ScenarioSpec spec;
    spec.id = to_string(logical.family) + "-" + std::to_string(seed);
    spec.origin = ScenarioOrigin::long_tail;
    spec.family = to_string(logical.family);
    spec.map_variant = variant;
    spec.map = map;
    spec.seed = seed;
    for (std::size_t i = 0; i < states.size(); ++i) {
      AgentInit init;
      init.history = backfill_history(states[i], cfg.history, cfg.dt);
      if (i == 1) {
        init.hero = true;
        init.hero_params = hero;
      }
      spec.agents.push_back(std::move(init));
    }
    validate_scenario(spec);
    return spec;
  }
  throw ScenarioError("long-tail scenario generation exhausted its retry budget (seed " + std::to_string(seed) + ")");
}

const ScenarioSpec& sample_initial_state(double alpha, std::span<const ScenarioSpec> nominal,
                                         std::span<const ScenarioSpec> longtail, Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ScenarioError("mixture weight alpha must lie in [0, 1]");
  const bool pick_longtail = alpha == 1.0 || (alpha > 0.0 && rng.bernoulli(alpha));
  const auto pool = pick_longtail ? longtail : nominal;
  if (pool.empty()) {
    throw ScenarioError(pick_longtail ? "long-tail scenario set is empty" : "nominal scenario set is empty");
  }
  return pool[rng.index(pool.size())];
}

}  // namespace closedloop
