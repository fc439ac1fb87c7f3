#include "closedloop/simulator.hpp"

#include <cmath>

#include "closedloop/error.hpp"

namespace closedloop {

std::string to_string(Infraction f) {
  switch (f) {
    case Infraction::none:
      return "none";
    case Infraction::collision:
      return "collision";
    case Infraction::offroad:
      return "offroad";
  }
  return "unknown";
}

Infraction infraction_from_string(const std::string& s) {
  if (s == "none") return Infraction::none;
  if (s == "collision") return Infraction::collision;
  if (s == "offroad") return Infraction::offroad;
  throw FormatError("unknown infraction tag '" + s + "'");
}

std::string to_string(ActionSource s) {
  switch (s) {
    case ActionSource::learner:
      return "learner";
    case ActionSource::hero:
      return "hero";
    case ActionSource::oracle:
      return "oracle";
  }
  return "unknown";
}

ActionSource source_from_string(const std::string& s) {
  if (s == "learner") return ActionSource::learner;
  if (s == "hero") return ActionSource::hero;
  if (s == "oracle") return ActionSource::oracle;
  throw FormatError("unknown action source '" + s + "'");
}

std::vector<Infraction> detect_infractions(const LaneGraph& map, std::span<const KinematicState> states,
                                           std::span<const std::uint8_t> alive) {
  const std::size_t n = states.size();
  auto is_alive = [&](std::size_t i) { return alive.empty() || alive[i] != 0; };
  std::vector<OrientedBox> boxes;
  boxes.reserve(n);
  for (const KinematicState& s : states) boxes.push_back(vehicle_box(s));

  std::vector<Infraction> out(n, Infraction::none);
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_alive(i)) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!is_alive(j)) continue;
      // Cheap bounding-circle rejection before the separating-axis test.
      const double reach = 0.5 * (std::hypot(states[i].box_length, states[i].box_width) +
                                  std::hypot(states[j].box_length, states[j].box_width));
      if (distance(boxes[i].center, boxes[j].center) > reach) continue;
      if (obb_overlap(boxes[i], boxes[j])) out[i] = out[j] = Infraction::collision;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (is_alive(i) && out[i] == Infraction::none && offroad_check(boxes[i], map.road_polygon())) {
      out[i] = Infraction::offroad;
    }
  }
  return out;
}

StepOutcome step_scene(const SceneState& scene, std::span<const AgentAction> joint_action, double dt) {
  if (static_cast<int>(joint_action.size()) != scene.agent_count()) {
    throw Error("step_scene: expected " + std::to_string(scene.agent_count()) + " actions, got " +
                std::to_string(joint_action.size()));
  }
  StepOutcome out;
  out.next = scene;
  out.next.tick = scene.tick + 1;
  std::vector<KinematicState> states;
  std::vector<std::uint8_t> alive;
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    AgentSlot& slot = out.next.agents[i];
    if (slot.alive) {
      const KinematicState next = bicycle_step(slot.state(), joint_action[i], dt).state;
      slot.history.insert(slot.history.begin(), next);
      slot.history.pop_back();
    }
    states.push_back(slot.state());
    alive.push_back(slot.alive ? 1 : 0);
  }
  out.infractions = detect_infractions(*scene.map, states, alive);
  out.rewards.assign(scene.agents.size(), 0.0);
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    AgentSlot& slot = out.next.agents[i];
    if (out.infractions[i] != Infraction::none && !slot.infracted) {
      out.rewards[i] = -1.0;
      slot.infracted = true;
    }
  }
  return out;
}

ShapedReward shaped_reward(const KinematicState& s, double speed_limit) {
  if (!(speed_limit > 0.0)) throw Error("shaped_reward: speed limit must be positive");
  const double delta = std::abs(s.v - speed_limit);
  return {0.5 * (kShapedRewardRange - delta) / kShapedRewardRange, delta >= kShapedRewardRange};
}

std::vector<std::vector<double>> scene_features(const SceneState& scene, const FeatureConfig& cfg) {
  const SceneWindow<double> w = scene.window();
  std::vector<std::vector<double>> out;
  out.reserve(scene.agents.size());
  for (int i = 0; i < scene.agent_count(); ++i) out.push_back(extract_features(w, i, *scene.map, cfg));
  return out;
}

Trajectory rollout(const PolicyMixture& mixture, const ScenarioSpec& spec, const RolloutOptions& options, Rng& rng) {
  if (options.horizon < 1) throw Error("rollout horizon must be at least 1");
  if (mixture.learner == LearnerKind::policy && mixture.policy == nullptr) {
    throw Error("rollout: policy mixture has no policy parameters");
  }
  if (options.record_values && mixture.value == nullptr) throw Error("rollout: value parameters required");
  if (spec.history_length() != mixture.features.history) {
    throw Error("rollout: scenario history length does not match the feature configuration");
  }

  SceneState scene = initial_scene(spec);
  const int n = scene.agent_count();
  Trajectory traj;
  traj.scenario_id = spec.id;
  traj.map = spec.map;
  traj.dt = options.dt;
  for (const AgentSlot& a : scene.agents) {
    traj.sources.push_back(a.hero                                  ? ActionSource::hero
                           : mixture.learner == LearnerKind::oracle ? ActionSource::oracle
                                                                    : ActionSource::learner);
  }

  const bool need_features = mixture.learner == LearnerKind::policy || options.record_features || options.record_values;
  auto record_state = [&](const std::vector<std::vector<double>>& feats) {
    traj.states.push_back(scene.current_states());
    if (options.record_features) traj.features.push_back(feats);
    if (options.record_values) {
      std::vector<double> v(static_cast<std::size_t>(n), 0.0);
      for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = value_forward(*mixture.value, feats[static_cast<std::size_t>(i)]);
      traj.values.push_back(std::move(v));
    }
  };

  std::vector<std::vector<double>> feats;
  if (need_features) feats = scene_features(scene, mixture.features);
  record_state(feats);

  for (int t = 0; t < options.horizon; ++t) {
    std::vector<AgentAction> applied(static_cast<std::size_t>(n));
    std::vector<AgentAction> raw(static_cast<std::size_t>(n));
    std::vector<double> lps(static_cast<std::size_t>(n), 0.0);
    std::vector<char> triggered(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const AgentSlot& slot = scene.agents[ui];
      if (slot.hero) {
        const HeroDecision d = hero_action(i, scene, *slot.hero_params, t, mixture.bounds, options.dt);
        applied[ui] = raw[ui] = d.action;
        triggered[ui] = d.triggered ? 1 : 0;
      } else if (mixture.learner == LearnerKind::oracle) {
        applied[ui] = raw[ui] = expert_oracle_action(i, scene, mixture.oracle, mixture.bounds, options.dt);
      } else {
        const ActionDistribution dist = policy_forward(*mixture.policy, feats[ui]);
        const SampledAction s = sample_action(dist, rng, options.mode, mixture.bounds);
        applied[ui] = s.applied;
        raw[ui] = s.raw;
        lps[ui] = log_prob(dist, s.raw);
      }
    }

    StepOutcome step = step_scene(scene, applied, options.dt);
    scene = std::move(step.next);
    for (int i = 0; i < n; ++i) {
      if (triggered[static_cast<std::size_t>(i)]) scene.agents[static_cast<std::size_t>(i)].hero_triggered = true;
    }

    bool speed_stop = false;
    if (options.reward == RewardMode::shaped) {
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const KinematicState& s = scene.agents[ui].state();
        const auto loc = scene.map->locate(box_center(s));
        if (!loc) continue;
        const ShapedReward sr = shaped_reward(s, scene.map->nodes()[static_cast<std::size_t>(loc->node)].speed_limit);
        step.rewards[ui] += sr.bonus;
        if (sr.terminate && traj.sources[ui] != ActionSource::hero) speed_stop = true;
      }
    }

    traj.actions.push_back(std::move(applied));
    traj.raw_actions.push_back(std::move(raw));
    traj.log_probs.push_back(std::move(lps));
    traj.rewards.push_back(std::move(step.rewards));
    traj.infractions.push_back(step.infractions);

    if (need_features) feats = scene_features(scene, mixture.features);
    record_state(feats);

    bool infraction = false;
    for (Infraction f : step.infractions) infraction = infraction || f != Infraction::none;
    if ((options.terminate_on_infraction && infraction) || speed_stop) {
      traj.termination = infraction && options.terminate_on_infraction ? Termination::infraction : Termination::speed;
      traj.termination_tick = t + 1;
      break;
    }
  }
  return traj;
}

Trajectory expert_trajectory(const ScenarioSpec& spec) {
  if (!spec.expert_log) throw ScenarioError("scenario " + spec.id + " has no expert log");
  const ExpertTrajectory& log = *spec.expert_log;
  Trajectory traj;
  traj.scenario_id = spec.id;
  traj.map = spec.map;
  traj.dt = log.dt;
  traj.states = log.states;
  traj.actions = log.actions;
  traj.raw_actions = log.actions;
  const std::size_t n = spec.agents.size();
  for (std::size_t t = 0; t < log.actions.size(); ++t) {
    traj.rewards.emplace_back(n, 0.0);
    traj.log_probs.emplace_back(n, 0.0);
    traj.infractions.emplace_back(n, Infraction::none);
  }
  traj.sources.assign(n, ActionSource::oracle);
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.agents[i].hero) traj.sources[i] = ActionSource::hero;
  }
  return traj;
}

}  // namespace closedloop
