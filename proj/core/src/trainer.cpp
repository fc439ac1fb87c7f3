#include "closedloop/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "closedloop/error.hpp"
#include "closedloop/imitation.hpp"
#include "closedloop/metrics.hpp"
#include "closedloop/parallel.hpp"

namespace closedloop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace

TrainerState make_trainer_state(const RunConfig& cfg, Rng& rng) {
  TrainerState s;
  Rng policy_rng = rng.substream("policy-init");
  Rng value_rng = rng.substream("value-init");
  s.policy = make_policy_parameters(cfg.features.dim(), cfg.network, policy_rng);
  s.value = make_value_parameters(cfg.features.dim(), cfg.network, value_rng);
  return s;
}

std::string format_epoch_row(const EpochReport& r) {
  std::string s = std::to_string(r.epoch) + "," + to_string(r.mode);
  for (double x : {r.il_loss, r.bc_loss, r.surrogate, r.value_loss, r.mean_return, r.collision_pct, r.offroad_pct,
                   r.learning_rate}) {
    s += "," + fmt(x);
  }
  s += "," + std::to_string(r.updates) + "," + std::to_string(r.skipped_updates) + "," + fmt(r.wall_seconds);
  return s;
}

void check_training_data(const TrainConfig& cfg, std::span<const ScenarioSpec> nominal,
                         std::span<const ScenarioSpec> longtail) {
  cfg.validate();
  const bool imitation = mode_uses_il(cfg.mode) || mode_uses_bc(cfg.mode);
  if (imitation && nominal.empty()) {
    throw ConfigError(to_string(cfg.mode) + " training needs nominal scenarios");
  }
  if (mode_uses_rl(cfg.mode)) {
    if (cfg.alpha < 1.0 && nominal.empty()) throw ConfigError("alpha < 1 needs nominal scenarios");
    if (cfg.alpha > 0.0 && longtail.empty()) throw ConfigError("alpha > 0 needs long-tail scenarios");
  }
  for (const ScenarioSpec& s : nominal) {
    if (s.origin != ScenarioOrigin::nominal) throw ConfigError("scenario " + s.id + " in the nominal set is long-tail");
    if (imitation && s.expert_log->ticks() < cfg.rollout_T) {
      throw ConfigError("expert log of " + s.id + " is shorter than rollout_T");
    }
  }
  for (const ScenarioSpec& s : longtail) {
    if (s.origin != ScenarioOrigin::long_tail) throw ConfigError("scenario " + s.id + " in the long-tail set is nominal");
  }
}

std::vector<PpoSample> build_ppo_samples(const Trajectory& traj, double gamma, double gae_lambda) {
  const int T = traj.ticks();
  if (static_cast<int>(traj.features.size()) != T + 1 || static_cast<int>(traj.values.size()) != T + 1) {
    throw Error("build_ppo_samples: rollout lacks recorded features or values");
  }
  const bool terminal = traj.termination != Termination::horizon;
  std::vector<PpoSample> out;
  for (int i = 0; i < traj.agent_count(); ++i) {
    if (traj.sources[static_cast<std::size_t>(i)] != ActionSource::learner) continue;
    const auto ui = static_cast<std::size_t>(i);
    std::vector<double> r(static_cast<std::size_t>(T));
    std::vector<double> v(static_cast<std::size_t>(T + 1));
    for (int t = 0; t < T; ++t) r[static_cast<std::size_t>(t)] = traj.rewards[static_cast<std::size_t>(t)][ui];
    for (int t = 0; t <= T; ++t) v[static_cast<std::size_t>(t)] = traj.values[static_cast<std::size_t>(t)][ui];
    if (terminal) v[static_cast<std::size_t>(T)] = 0.0;
    const auto adv = compute_gae(r, v, gamma, gae_lambda);
    for (int t = 0; t < T; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      PpoSample s;
      s.features = traj.features[ut][ui];
      s.action = traj.raw_actions[ut][ui];
      s.old_log_prob = traj.log_probs[ut][ui];
      s.advantage = adv[ut];
      s.value_target = adv[ut] + v[ut];
      out.push_back(std::move(s));
    }
  }
  return out;
}

UpdateGradient update_gradient(const RunConfig& cfg, const TrainerState& state, std::span<const PpoSample> rl,
                               int rl_rollouts, std::span<const ScenarioSpec* const> imitation, Rng& rng) {
  const TrainConfig& tc = cfg.train;
  UpdateGradient out;
  out.policy.assign(state.policy.size(), 0.0);
  out.value.assign(state.value.size(), 0.0);

  if (!rl.empty()) {
    const PpoResult ppo = ppo_losses(rl, state.policy, state.value, tc.clip_eps, tc.normalize_advantages);
    if (rl_rollouts < 1) throw Error("update_gradient: RL samples without rollouts");
    // Per rollout the surrogate is summed over agents and ticks, like il_loss.
    const double per_rollout = 1.0 / static_cast<double>(rl_rollouts);
    const double inv = 1.0 / static_cast<double>(rl.size());
    for (std::size_t k = 0; k < out.policy.size(); ++k) {
      out.policy[k] = tc.lambda_rl * ppo.policy_gradient[k] * per_rollout;
    }
    for (std::size_t k = 0; k < out.value.size(); ++k) out.value[k] = ppo.value_gradient[k] * inv;
    out.surrogate = ppo.surrogate * inv;
    out.value_loss = ppo.value_loss * inv;
    out.rl_count = static_cast<int>(rl.size());
  }

  if (!imitation.empty()) {
    const bool bc = mode_uses_bc(tc.mode);
    ImitationOptions opt;
    opt.horizon = tc.rollout_T;
    opt.huber_delta = tc.huber_delta;
    opt.mode = tc.il_sample_mode;
    opt.features = cfg.features;
    opt.bounds = cfg.bounds;
    opt.dt = cfg.dt;
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < imitation.size(); ++k) seeds.push_back(rng.next_u64());
    std::vector<LossAndGradient> parts(imitation.size());
    parallel_for(imitation.size(), [&](std::size_t k) {
      if (bc) {
        parts[k] = bc_loss(*imitation[k], state.policy, cfg.features);
      } else {
        Rng local(seeds[k]);
        parts[k] = il_loss(*imitation[k], state.policy, opt, &local);
      }
    });
    const double inv = 1.0 / static_cast<double>(imitation.size());
    double loss = 0.0;
    for (const LossAndGradient& p : parts) {
      loss += p.loss;
      for (std::size_t k = 0; k < out.policy.size(); ++k) out.policy[k] += p.gradient[k] * inv;
    }
    (bc ? out.bc_loss : out.il_loss) = loss * inv;
    out.imitation_count = static_cast<int>(imitation.size());
  }
  return out;
}

std::vector<Trajectory> collect_rl_rollouts(const RunConfig& cfg, const TrainerState& state,
                                            std::span<const ScenarioSpec* const> specs, std::uint64_t seed) {
  PolicyMixture mix;
  mix.policy = &state.policy;
  mix.value = &state.value;
  mix.features = cfg.features;
  mix.bounds = cfg.bounds;
  mix.oracle = cfg.oracle;
  RolloutOptions opt;
  opt.horizon = cfg.train.rl_horizon;
  opt.mode = SampleMode::reparameterized;
  opt.terminate_on_infraction = true;
  opt.reward = cfg.train.mode == TrainMode::rl_shaped ? RewardMode::shaped : RewardMode::sparse;
  opt.record_features = true;
  opt.record_values = true;
  opt.dt = cfg.dt;
  std::vector<Trajectory> out(specs.size());
  parallel_for(specs.size(), [&](std::size_t k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    out[k] = rollout(mix, *specs[k], opt, rng);
  });
  return out;
}

namespace {

struct Accumulator {
  double sum = 0.0;
  int count = 0;
  void add(double x, int n = 1) {
    sum += x * n;
    count += n;
  }
  double mean() const { return count > 0 ? sum / count : kNaN; }
};

int iterations_for(const RunConfig& cfg, std::size_t nominal, std::size_t longtail) {
  const TrainConfig& tc = cfg.train;
  if (tc.iterations_per_epoch > 0) return tc.iterations_per_epoch;
  if (mode_uses_rl(tc.mode)) {
    return std::max(1, static_cast<int>((nominal + longtail + tc.ppo_batch - 1) / tc.ppo_batch));
  }
  return std::max(1, static_cast<int>((nominal + tc.il_minibatch - 1) / tc.il_minibatch));
}

}  // namespace

EpochReport train_epoch(const RunConfig& cfg, std::span<const ScenarioSpec> nominal,
                        std::span<const ScenarioSpec> longtail, TrainerState& state, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig& tc = cfg.train;
  check_training_data(tc, nominal, longtail);

  EpochReport report;
  report.epoch = state.epoch + 1;
  report.mode = tc.mode;
  report.learning_rate = scheduled_learning_rate(tc.learning_rate, tc.lr_decay_factor, tc.lr_decay_every_epochs, state.epoch);
  AdamWConfig opt;
  opt.learning_rate = report.learning_rate;
  opt.weight_decay = tc.weight_decay;
  opt.grad_clip_norm = tc.grad_clip_norm;

  Accumulator il, bc, surrogate, value_loss, ret;
  InfractionCounts infractions;

  auto apply = [&](const UpdateGradient& g, bool train_value) {
    const StepReport p = optimizer_step(state.policy.values, g.policy, opt, state.policy_opt);
    if (p.applied) {
      ++state.policy.step;
    } else {
      ++report.skipped_updates;
    }
    if (train_value) {
      const StepReport v = optimizer_step(state.value.values, g.value, opt, state.value_opt);
      if (v.applied) ++state.value.step;
    }
    ++report.updates;
    if (g.imitation_count > 0) (mode_uses_bc(tc.mode) ? bc : il).add(mode_uses_bc(tc.mode) ? g.bc_loss : g.il_loss, g.imitation_count);
    if (g.rl_count > 0) {
      surrogate.add(g.surrogate, g.rl_count);
      value_loss.add(g.value_loss, g.rl_count);
    }
  };

  const int iterations = iterations_for(cfg, nominal.size(), longtail.size());
  for (int it = 0; it < iterations; ++it) {
    Rng iter_rng(rng.next_u64());
    if (!mode_uses_rl(tc.mode)) {
      std::vector<const ScenarioSpec*> batch;
      for (int k = 0; k < tc.il_minibatch; ++k) batch.push_back(&nominal[iter_rng.index(nominal.size())]);
      apply(update_gradient(cfg, state, {}, 0, batch, iter_rng), false);
      continue;
    }

    // Algorithm 1: K initial states from the alpha-mixture.
    std::vector<const ScenarioSpec*> specs;
    for (int k = 0; k < tc.ppo_batch; ++k) specs.push_back(&sample_initial_state(tc.alpha, nominal, longtail, iter_rng));
    const std::vector<Trajectory> trajs = collect_rl_rollouts(cfg, state, specs, iter_rng.next_u64());
    std::vector<std::vector<PpoSample>> samples(trajs.size());
    for (std::size_t k = 0; k < trajs.size(); ++k) {
      samples[k] = build_ppo_samples(trajs[k], tc.gamma, tc.gae_lambda);
      const InfractionCounts c = count_infractions(trajs[k]);
      infractions.agents += c.agents;
      infractions.collided += c.collided;
      infractions.offroad += c.offroad;
      for (int i = 0; i < trajs[k].agent_count(); ++i) {
        if (trajs[k].sources[static_cast<std::size_t>(i)] != ActionSource::learner) continue;
        std::vector<double> r;
        for (const auto& row : trajs[k].rewards) r.push_back(row[static_cast<std::size_t>(i)]);
        ret.add(discounted_return(r, tc.gamma));
      }
    }

    const bool imitation = mode_uses_il(tc.mode) || mode_uses_bc(tc.mode);
    for (int pass = 0; pass < tc.ppo_epochs; ++pass) {
      for (std::size_t begin = 0; begin < specs.size(); begin += static_cast<std::size_t>(tc.ppo_minibatch)) {
        const std::size_t end = std::min(specs.size(), begin + static_cast<std::size_t>(tc.ppo_minibatch));
        std::vector<PpoSample> chunk;
        std::vector<const ScenarioSpec*> nominal_chunk;
        for (std::size_t k = begin; k < end; ++k) {
          chunk.insert(chunk.end(), samples[k].begin(), samples[k].end());
          // Imitation only on rollouts that started from a nominal log.
          if (imitation && specs[k]->origin == ScenarioOrigin::nominal &&
              static_cast<int>(nominal_chunk.size()) < tc.il_minibatch) {
            nominal_chunk.push_back(specs[k]);
          }
        }
        if (chunk.empty() && nominal_chunk.empty()) continue;
        apply(update_gradient(cfg, state, chunk, static_cast<int>(end - begin), nominal_chunk, iter_rng), true);
      }
    }
  }

  report.il_loss = il.mean();
  report.bc_loss = bc.mean();
  report.surrogate = surrogate.mean();
  report.value_loss = value_loss.mean();
  report.mean_return = ret.mean();
  report.collision_pct = infractions.agents > 0 ? 100.0 * infractions.collided / infractions.agents : kNaN;
  report.offroad_pct = infractions.agents > 0 ? 100.0 * infractions.offroad / infractions.agents : kNaN;
  state.epoch += 1;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Checkpoint make_checkpoint(const RunConfig& cfg, const TrainerState& state) {
  Checkpoint c;
  c.features = cfg.features;
  c.policy = state.policy;
  c.value = state.value;
  return c;
}

}  // namespace closedloop
