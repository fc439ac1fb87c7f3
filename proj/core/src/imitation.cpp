#include "closedloop/imitation.hpp"

#include <cmath>
#include <string>

#include "closedloop/error.hpp"
#include "closedloop/tape.hpp"

namespace closedloop {

double huber(double e, double delta) {
  const double a = std::abs(e);
  return a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
}

namespace {

using ad::Var;

Var huber_var(const Var& e, double delta) {
  if (e.value() <= delta) return 0.5 * e * e;
  return delta * (e - 0.5 * delta);
}

Var softplus_var(const Var& x) {
  const double s = 1.0 / (1.0 + std::exp(-x.value()));
  const Var parents[] = {x};
  const double partials[] = {s};
  return Var::node(softplus(x.value()), parents, partials);
}

// Network evaluation recorded for the parameter pass after the sweep.
struct NetCall {
  MlpCache cache;
  std::array<int, kPolicyOutputs> raw_index{-1, -1, -1, -1};
};

}  // namespace

LossAndGradient il_loss(const ScenarioSpec& spec, const ParameterSet& policy, const ImitationOptions& options,
                        Rng* rng) {
  if (!spec.expert_log) throw ScenarioError("il_loss needs a nominal scenario with an expert log");
  const ExpertTrajectory& log = *spec.expert_log;
  if (options.horizon < 1 || options.horizon > log.ticks()) {
    throw ScenarioError("il_loss horizon " + std::to_string(options.horizon) + " exceeds the expert log of " +
                        spec.id);
  }
  if (options.mode == SampleMode::reparameterized && rng == nullptr) {
    throw Error("il_loss in reparameterized mode needs a random source");
  }
  for (const AgentInit& a : spec.agents) {
    if (a.hero) throw ScenarioError("il_loss expects a scenario without scripted heroes");
  }
  const int n = spec.agent_count();
  const int hist = spec.history_length();
  if (hist != options.features.history) throw Error("il_loss: history length does not match the features");
  const int dim = options.features.dim();
  const bool sampled = options.mode == SampleMode::reparameterized;
  const int rows = sampled ? kPolicyOutputs : 2;

  ad::Tape tape;
  ad::TapeScope scope(tape);

  // poses[i][lag], lag 0 = current; initial history enters as constants.
  std::vector<std::vector<Pose<Var>>> poses(static_cast<std::size_t>(n));
  std::vector<KinematicState> shapes;
  for (int i = 0; i < n; ++i) {
    const AgentInit& a = spec.agents[static_cast<std::size_t>(i)];
    for (const KinematicState& s : a.history) poses[static_cast<std::size_t>(i)].push_back({s.x, s.y, s.theta, s.v});
    shapes.push_back(a.history.front());
  }

  std::vector<NetCall> calls;
  calls.reserve(static_cast<std::size_t>(n * options.horizon));
  Var loss = 0.0;
  std::vector<Var> f(static_cast<std::size_t>(dim));
  std::vector<double> fv(static_cast<std::size_t>(dim));

  for (int t = 0; t < options.horizon; ++t) {
    SceneWindow<Var> w(n, hist);
    for (int i = 0; i < n; ++i) {
      for (int lag = 0; lag < hist; ++lag) w.pose(i, lag) = poses[static_cast<std::size_t>(i)][static_cast<std::size_t>(lag)];
      w.box_length[static_cast<std::size_t>(i)] = shapes[static_cast<std::size_t>(i)].box_length;
      w.box_width[static_cast<std::size_t>(i)] = shapes[static_cast<std::size_t>(i)].box_width;
    }

    std::vector<Pose<Var>> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      extract_features<Var>(w, i, *spec.map, options.features, std::span<Var>(f));
      for (int k = 0; k < dim; ++k) fv[static_cast<std::size_t>(k)] = f[static_cast<std::size_t>(k)].value();

      NetCall call;
      mlp_forward(policy.shape, policy.values, fv, call.cache);
      const auto raw = call.cache.output();
      const std::vector<double> jac = mlp_input_jacobian(policy.shape, policy.values, call.cache, rows);
      std::array<Var, kPolicyOutputs> raw_var{};
      for (int k = 0; k < rows; ++k) {
        raw_var[static_cast<std::size_t>(k)] = Var::node(
            raw[static_cast<std::size_t>(k)], f,
            std::span<const double>(jac.data() + static_cast<std::ptrdiff_t>(k) * dim, static_cast<std::size_t>(dim)));
        // Outputs always depend on the parameters, even when the features are constant.
        if (raw_var[static_cast<std::size_t>(k)].is_constant()) {
          raw_var[static_cast<std::size_t>(k)] = Var::leaf(raw[static_cast<std::size_t>(k)]);
        }
        call.raw_index[static_cast<std::size_t>(k)] = raw_var[static_cast<std::size_t>(k)].index();
      }
      calls.push_back(std::move(call));

      Var accel = kActionScale[0] * raw_var[0];
      Var steer = kActionScale[1] * raw_var[1];
      if (sampled) {
        const double z0 = rng->standard_normal();
        const double z1 = rng->standard_normal();
        accel = accel + (kActionScale[0] * softplus_var(raw_var[2]) + kSigmaFloor) * z0;
        steer = steer + (kActionScale[1] * softplus_var(raw_var[3]) + kSigmaFloor) * z1;
      }
      // A clipped action no longer depends on the network.
      const AgentAction clipped = options.bounds.clip({accel.value(), steer.value()});
      if (clipped.accel != accel.value()) accel = clipped.accel;
      if (clipped.steer != steer.value()) steer = clipped.steer;

      const Pose<Var>& p = poses[static_cast<std::size_t>(i)].front();
      const KinematicState s = shapes[static_cast<std::size_t>(i)].with_pose({p.x.value(), p.y.value(), p.theta.value(), p.v.value()});
      const AgentAction a{accel.value(), steer.value()};
      const StepResult step = bicycle_step(s, a, options.dt);
      const BicycleJacobians J = bicycle_jacobians(s, a, options.dt);
      const Var parents[] = {p.x, p.y, p.theta, p.v, accel, steer};
      const std::array<double, 4> values = step.state.pose();
      std::array<Var, 4> out{};
      for (int r = 0; r < 4; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        const double partials[] = {J.d_state[ur][0], J.d_state[ur][1], J.d_state[ur][2],
                                   J.d_state[ur][3], J.d_action[ur][0], J.d_action[ur][1]};
        out[ur] = Var::node(values[ur], parents, partials);
      }
      next[static_cast<std::size_t>(i)] = {out[0], out[1], out[2], out[3]};
    }

    for (int i = 0; i < n; ++i) {
      auto& h = poses[static_cast<std::size_t>(i)];
      h.insert(h.begin(), next[static_cast<std::size_t>(i)]);
      h.pop_back();
      const KinematicState& e = log.states[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(i)];
      const Pose<Var>& p = h.front();
      loss += huber_var(ad::hypot(p.x - e.x, p.y - e.y), options.huber_delta);
    }
    if (!std::isfinite(loss.value())) {
      throw NumericError("il_loss became non-finite at tick " + std::to_string(t + 1) + " of " + spec.id);
    }
  }

  LossAndGradient out;
  out.loss = loss.value();
  out.gradient.assign(policy.size(), 0.0);
  if (loss.is_constant()) return out;
  const std::pair<int, double> seed[] = {{loss.index(), 1.0}};
  const std::vector<double> adj = tape.backward(seed);
  std::array<double, kPolicyOutputs> g{};
  for (const NetCall& c : calls) {
    bool any = false;
    for (int k = 0; k < kPolicyOutputs; ++k) {
      const int idx = c.raw_index[static_cast<std::size_t>(k)];
      g[static_cast<std::size_t>(k)] = idx >= 0 ? adj[static_cast<std::size_t>(idx)] : 0.0;
      any = any || g[static_cast<std::size_t>(k)] != 0.0;
    }
    if (any) mlp_backward(policy.shape, policy.values, c.cache, g, out.gradient, {});
  }
  return out;
}

std::vector<SceneWindow<double>> expert_windows(const ScenarioSpec& spec) {
  if (!spec.expert_log) throw ScenarioError("scenario " + spec.id + " has no expert log");
  const ExpertTrajectory& log = *spec.expert_log;
  const int n = spec.agent_count();
  const int hist = spec.history_length();
  std::vector<SceneWindow<double>> out;
  for (int t = 0; t <= log.ticks(); ++t) {
    SceneWindow<double> w(n, hist);
    for (int i = 0; i < n; ++i) {
      const AgentInit& a = spec.agents[static_cast<std::size_t>(i)];
      for (int lag = 0; lag < hist; ++lag) {
        const int tick = t - lag;
        const KinematicState& s = tick >= 0 ? log.states[static_cast<std::size_t>(tick)][static_cast<std::size_t>(i)]
                                            : a.history[static_cast<std::size_t>(-tick)];
        w.pose(i, lag) = {s.x, s.y, s.theta, s.v};
      }
      w.box_length[static_cast<std::size_t>(i)] = a.history.front().box_length;
      w.box_width[static_cast<std::size_t>(i)] = a.history.front().box_width;
      w.hero[static_cast<std::size_t>(i)] = a.hero ? 1 : 0;
    }
    out.push_back(std::move(w));
  }
  return out;
}

LossAndGradient bc_loss(const ScenarioSpec& spec, const ParameterSet& policy, const FeatureConfig& features) {
  const auto windows = expert_windows(spec);
  const ExpertTrajectory& log = *spec.expert_log;
  LossAndGradient out;
  out.gradient.assign(policy.size(), 0.0);
  int count = 0;
  MlpCache cache;
  for (int t = 0; t < log.ticks(); ++t) {
    for (int i = 0; i < spec.agent_count(); ++i) {
      if (spec.agents[static_cast<std::size_t>(i)].hero) continue;
      const auto f = extract_features(windows[static_cast<std::size_t>(t)], i, *spec.map, features);
      const ActionDistribution d = policy_forward(policy, f, &cache);
      const AgentAction& a = log.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
      out.loss -= log_prob(d, a);
      const LogProbGradient lg = log_prob_gradient(d, a);
      auto g = raw_gradient(cache.output(), {-lg.mu[0], -lg.mu[1]}, {-lg.sigma[0], -lg.sigma[1]});
      mlp_backward(policy.shape, policy.values, cache, g, out.gradient, {});
      ++count;
    }
  }
  if (count == 0) throw ScenarioError("bc_loss: scenario " + spec.id + " has no learner agents");
  out.loss /= count;
  for (double& g : out.gradient) g /= count;
  return out;
}

}  // namespace closedloop
