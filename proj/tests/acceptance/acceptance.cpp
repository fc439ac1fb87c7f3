// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// when any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "closedloop/evaluation.hpp"
#include "closedloop/imitation.hpp"
#include "closedloop/metrics.hpp"
#include "closedloop/ppo.hpp"
#include "closedloop/simulator.hpp"
#include "closedloop/trainer.hpp"

namespace fs = std::filesystem;
using namespace closedloop;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr int kHistory = 3;

FeatureConfig small_features() {
  FeatureConfig f;
  f.history = kHistory;
  f.neighbors = 2;
  return f;
}

std::vector<ScenarioSpec> longtail_specs(int count, std::uint64_t offset) {
  LongTailConfig cfg;
  cfg.history = kHistory;
  const ScenarioFamily fams[] = {ScenarioFamily::cut_in, ScenarioFamily::hard_brake, ScenarioFamily::merge};
  std::vector<ScenarioSpec> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(sample_concrete_scenario(default_logical_scenario(fams[k % 3]), offset + static_cast<std::uint64_t>(k), cfg));
    out.back().id = "lt" + std::to_string(k);
  }
  return out;
}

// 1. BPTT gradient of il_loss against five-point finite differences.
Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng pick(11);
  double worst = 0.0;
  std::size_t params = 0;
  int problems = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const int horizon = pick.uniform_int(2, 10);
    ImitationOptions opt;
    opt.features = small_features();
    opt.horizon = horizon;
    NominalConfig nc;
    nc.history = kHistory;
    nc.log_ticks = horizon;
    nc.agents_per_lane = {1.0, 2.0};
    ScenarioSpec spec = generate_nominal_scenario(nc, static_cast<int>(seed % 2), seed);
    if (spec.agent_count() > 3) {
      spec.agents.resize(3);
      for (auto& row : spec.expert_log->states) row.resize(3);
      for (auto& row : spec.expert_log->actions) row.resize(3);
    }
    NetworkConfig net;
    net.hidden = {16, 16};
    net.output_init_scale = 0.5;
    Rng rng(seed + 100);
    const ParameterSet policy = make_policy_parameters(opt.features.dim(), net, rng);
    params = policy.size();
    const LossAndGradient lg = il_loss(spec, policy, opt);
    ParameterSet probe = policy;
    for (std::size_t k = 0; k < policy.size(); ++k) {
      const double h = 1e-4 * std::max(1.0, std::abs(policy.values[k]));
      auto at = [&](double off) {
        probe.values[k] = policy.values[k] + off;
        return il_loss(spec, probe, opt).loss;
      };
      const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      probe.values[k] = policy.values[k];
      const double err = std::abs(fd - lg.gradient[k]) / std::max(1e-6, std::abs(fd) + std::abs(lg.gradient[k]));
      worst = std::max(worst, err);
    }
    ++problems;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0, std::to_string(problems) + " problems, " + std::to_string(params) +
                                           " parameters each, max rel err " + fmt("%.2e", worst) + ", " +
                                           fmt("%.1f", secs) + " s"};
}

// 2. Closed form of constant-input rollouts and Jacobians against central differences.
Outcome dynamics_exactness() {
  Rng rng(5);
  double closed = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    KinematicState s;
    s.x = rng.uniform(-50, 50);
    s.y = rng.uniform(-50, 50);
    s.theta = rng.uniform(-M_PI, M_PI);
    s.v = rng.uniform(3, 30);
    const double u = rng.uniform(-0.25, 3);
    const auto ref = oracle::straight_closed_form(s.x, s.y, s.theta, s.v, u, 20, 0.5);
    for (int k = 0; k < 20; ++k) s = bicycle_step(s, {u, 0}, 0.5).state;
    closed = std::max({closed, std::abs(s.x - ref.x), std::abs(s.y - ref.y), std::abs(s.v - ref.v)});
  }
  double jac = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    KinematicState s;
    s.x = rng.uniform(-20, 20);
    s.y = rng.uniform(-20, 20);
    s.theta = rng.uniform(-M_PI, M_PI);
    s.v = rng.uniform(1, 30);
    const AgentAction a{rng.uniform(-2, 2), rng.uniform(-0.4, 0.4)};
    const auto j = bicycle_jacobians(s, a, 0.5);
    auto err = [](double x, double y) { return std::abs(x - y) / std::max({1.0, std::abs(x), std::abs(y)}); };
    for (int c = 0; c < 6; ++c) {
      KinematicState sp = s, sm = s;
      AgentAction ap = a, am = a;
      if (c < 4) {
        auto p = s.pose(), m = s.pose();
        p[c] += h;
        m[c] -= h;
        sp = s.with_pose(p);
        sm = s.with_pose(m);
      } else {
        (c == 4 ? ap.accel : ap.steer) += h;
        (c == 4 ? am.accel : am.steer) -= h;
      }
      const auto fp = bicycle_step(sp, ap, 0.5).state.pose();
      const auto fm = bicycle_step(sm, am, 0.5).state.pose();
      for (int r = 0; r < 4; ++r) {
        const double analytic = c < 4 ? j.d_state[r][c] : j.d_action[r][c - 4];
        jac = std::max(jac, err((fp[r] - fm[r]) / (2 * h), analytic));
      }
    }
  }
  return {closed < 1e-9 && jac < 1e-6,
          "closed-form max err " + fmt("%.2e", closed) + " (1000 rollouts), Jacobian max err " + fmt("%.2e", jac)};
}

struct SmallNets {
  FeatureConfig features = small_features();
  ParameterSet policy;
  ParameterSet value;
  PolicyMixture mixture;

  explicit SmallNets(std::uint64_t seed) {
    NetworkConfig net;
    net.hidden = {16, 16};
    net.output_init_scale = 0.3;
    Rng rng(seed);
    policy = make_policy_parameters(features.dim(), net, rng);
    value = make_value_parameters(features.dim(), net, rng);
    mixture.policy = &policy;
    mixture.value = &value;
    mixture.features = features;
  }
};

// 3. Factorized PPO against a scene-level computation.
Outcome factorization() {
  const double gamma = 0.79;
  SmallNets nets(3);
  RolloutOptions opt;
  opt.horizon = 20;
  opt.mode = SampleMode::reparameterized;
  opt.record_features = true;
  opt.record_values = true;

  // N = 1: a lone learner on a nominal map.
  int exact = 0, single = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    NominalConfig nc;
    nc.history = kHistory;
    ScenarioSpec spec = generate_nominal_scenario(nc, static_cast<int>(seed % 2), seed);
    spec.agents.resize(1);
    spec.expert_log.reset();
    spec.origin = ScenarioOrigin::long_tail;
    spec.family = "hard_brake";
    Rng rng(seed);
    const Trajectory traj = rollout(nets.mixture, spec, opt, rng);
    const auto samples = build_ppo_samples(traj, gamma, 1.0);
    const double fact = ppo_losses(samples, nets.policy, nets.value, 0.2, false).surrogate;

    const int T = traj.ticks();
    std::vector<double> adv(static_cast<std::size_t>(T));
    double next = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const auto ut = static_cast<std::size_t>(t);
      const double v_next = (t + 1 == T && traj.termination != Termination::horizon) ? 0.0 : traj.values[ut + 1][0];
      const double delta = traj.rewards[ut][0] + gamma * v_next - traj.values[ut][0];
      next = delta + gamma * 1.0 * next;
      adv[ut] = next;
    }
    double scene = 0.0;
    for (int t = 0; t < T; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      const double lp = log_prob(policy_forward(nets.policy, traj.features[ut][0]), traj.raw_actions[ut][0]);
      const double ratio = std::exp(lp - traj.log_probs[ut][0]);
      const double clipped = std::min(std::max(ratio, 0.8), 1.2);
      scene += std::min(ratio * adv[ut], clipped * adv[ut]);
    }
    exact += fact == scene;
    ++single;
  }

  // N <= 5: per-agent value targets sum to the scene return.
  double worst = 0.0;
  int scenes = 0;
  for (const ScenarioSpec& full : longtail_specs(60, 500)) {
    ScenarioSpec spec = full;
    if (spec.agent_count() > 5) spec.agents.resize(5);
    Rng rng(static_cast<std::uint64_t>(scenes));
    const Trajectory traj = rollout(nets.mixture, spec, opt, rng);
    const int n = traj.agent_count();
    std::vector<std::vector<double>> per_agent(static_cast<std::size_t>(n));
    std::vector<double> joint(static_cast<std::size_t>(traj.ticks()), 0.0);
    for (int t = 0; t < traj.ticks(); ++t) {
      for (int i = 0; i < n; ++i) {
        const double r = traj.rewards[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
        per_agent[static_cast<std::size_t>(i)].push_back(r);
        joint[static_cast<std::size_t>(t)] += r;
      }
    }
    double sum = 0.0;
    for (double v : compute_value_targets(per_agent, gamma)) sum += v;
    worst = std::max(worst, std::abs(sum - oracle::reward_to_go(joint, gamma, 0)));
    ++scenes;
  }
  return {exact == single && worst < 1e-12, std::to_string(exact) + "/" + std::to_string(single) +
                                                 " single-agent objectives bit-identical, value-sum max err " +
                                                 fmt("%.2e", worst) + " over " + std::to_string(scenes) + " scenes"};
}

// 4. GAE with lambda 1 against the reward-to-go oracle.
Outcome gae_oracle() {
  Rng rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = rng.uniform_int(1, 40);
    const double gamma = rng.uniform(0.5, 1.0);
    std::vector<double> r(static_cast<std::size_t>(T)), v(static_cast<std::size_t>(T + 1));
    for (double& x : r) x = rng.bernoulli(0.5) ? rng.uniform(-1, 1) : 0.0;
    for (double& x : v) x = rng.uniform(-2, 2);
    if (rng.bernoulli(0.5)) v.back() = 0.0;
    const auto a = compute_gae(r, v, gamma, 1.0);
    for (int t = 0; t < T; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      const double ref = oracle::reward_to_go(r, gamma, ut) + std::pow(gamma, T - t) * v.back() - v[ut];
      worst = std::max(worst, std::abs(a[ut] - ref));
    }
  }
  return {worst < 1e-10, "1000 instances, max err " + fmt("%.2e", worst)};
}

// 5. SAT overlap against perimeter sampling.
Outcome collision_oracle() {
  Rng rng(17);
  int agree = 0, band = 0, disagree = 0, overlapping = 0;
  for (int k = 0; k < 10000; ++k) {
    auto box = [&] {
      return oracle::Box{rng.uniform(-4, 4), rng.uniform(-2, 2), rng.uniform(-M_PI, M_PI), rng.uniform(0.5, 2.5),
                         rng.uniform(0.4, 1.2)};
    };
    const oracle::Box a = box(), b = box();
    const bool sat = obb_overlap(oracle::to_obb(a), oracle::to_obb(b));
    const bool outer = oracle::boxes_overlap_sampled(oracle::grown(a, 1e-3), b, 10000);
    const bool inner = oracle::boxes_overlap_sampled(oracle::grown(a, -1e-3), b, 10000);
    if (outer != inner) {
      ++band;
      continue;
    }
    overlapping += outer;
    (sat == outer ? agree : disagree) += 1;
  }
  return {disagree == 0, std::to_string(agree) + " agree (" + std::to_string(overlapping) + " overlapping), " +
                             std::to_string(band) + " in the separation band, " + std::to_string(disagree) +
                             " disagree"};
}

// 6. Jensen-Shannon divergence properties.
Outcome jsd_suite() {
  bool ok = true;
  const std::vector<double> p{1, 0}, q{0.5, 0.5};
  const double example = jsd(p, q);
  ok = ok && std::abs(example - 0.2158) < 1e-4;
  Rng rng(19);
  double asym = 0.0;
  int out_of_range = 0, bad_zero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int bins = rng.uniform_int(1, 50);
    std::vector<double> a(static_cast<std::size_t>(bins)), b(static_cast<std::size_t>(bins));
    double sa = 0.0, sb = 0.0;
    for (int k = 0; k < bins; ++k) {
      a[static_cast<std::size_t>(k)] = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0, 1);
      b[static_cast<std::size_t>(k)] = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0, 1);
      sa += a[static_cast<std::size_t>(k)];
      sb += b[static_cast<std::size_t>(k)];
    }
    if (sa == 0.0 || sb == 0.0) continue;
    for (auto& x : a) x /= sa;
    for (auto& x : b) x /= sb;
    const double d = jsd(a, b);
    asym = std::max(asym, std::abs(d - jsd(b, a)));
    out_of_range += d < 0.0 || d > std::log(2.0) + 1e-12;
    bad_zero += jsd(a, a) != 0.0 || (a != b && !(d > 0.0));
  }
  ok = ok && asym < 1e-12 && out_of_range == 0 && bad_zero == 0;
  return {ok, "example " + fmt("%.6f", example) + ", asymmetry " + fmt("%.1e", asym) + ", " +
                  std::to_string(out_of_range) + " out of range, " + std::to_string(bad_zero) + " zero violations"};
}

// 7. Sparse-reward returns and nothing recorded past termination.
Outcome reward_semantics() {
  const double gamma = 0.79;
  SmallNets nets(7);
  RolloutOptions opt;
  opt.horizon = 20;
  opt.mode = SampleMode::reparameterized;
  const auto specs = longtail_specs(1000, 10000);
  int bad_return = 0, bad_shape = 0, terminated = 0;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    Rng rng(k);
    const Trajectory t = rollout(nets.mixture, specs[k], opt, rng);
    const auto T = static_cast<std::size_t>(t.ticks());
    bool shape = t.states.size() == T + 1 && t.rewards.size() == T && t.infractions.size() == T &&
                 t.raw_actions.size() == T && t.log_probs.size() == T;
    if (t.termination != Termination::horizon) {
      ++terminated;
      bool infraction = false;
      for (Infraction f : t.infractions.back()) infraction = infraction || f != Infraction::none;
      if (t.termination == Termination::infraction) shape = shape && infraction;
      shape = shape && t.termination_tick && *t.termination_tick == t.ticks() && t.ticks() <= opt.horizon;
    } else {
      shape = shape && t.ticks() == opt.horizon;
    }
    bad_shape += !shape;
    for (int i = 0; i < t.agent_count(); ++i) {
      std::vector<double> r;
      for (const auto& row : t.rewards) r.push_back(row[static_cast<std::size_t>(i)]);
      const double g = oracle::reward_to_go(r, gamma, 0);
      bool ok = g == 0.0;
      for (std::size_t tick = 0; tick < T; ++tick) ok = ok || std::abs(g + std::pow(gamma, tick)) < 1e-12;
      bad_return += !ok;
    }
  }
  return {bad_return == 0 && bad_shape == 0 && terminated > 0,
          "1000 rollouts, " + std::to_string(terminated) + " terminated, " + std::to_string(bad_return) +
              " bad returns, " + std::to_string(bad_shape) + " bad records"};
}

// ---------------------------------------------------------------------------
// CLI-driven criteria.

struct Cli {
  std::string exe;
  fs::path work;

  bool run(const std::string& args, const std::string& log) const {
    const std::string cmd = "\"" + exe + "\" " + args + " > \"" + (work / log).string() + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 8. Two training runs with one seed give byte-identical outputs.
Outcome determinism(const Cli& cli) {
  const fs::path dir = cli.work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "tiny.cfg") << "config_version = 1\n"
                                     "mode = RTR\n"
                                     "total_epochs = 2\n"
                                     "iterations_per_epoch = 2\n"
                                     "il_minibatch = 4\n"
                                     "ppo_batch = 8\n"
                                     "ppo_minibatch = 4\n"
                                     "learning_rate = 1e-3\n"
                                     "nominal_train = 6\nnominal_heldout = 4\n"
                                     "longtail_train = 6\nlongtail_heldout = 4\nlongtail_ood = 4\n"
                                     "nominal_ticks = 10\n"
                                     "hidden = 16,16\n"
                                     "bootstrap_resamples = 200\n";
  const std::string cfg = (dir / "tiny.cfg").string();
  const std::string data = (dir / "data").string();
  if (!cli.run("gen-data -c \"" + cfg + "\" -o \"" + data + "\"", "determinism/gen.log")) return {false, "gen-data failed"};
  for (const char* run : {"a", "b"}) {
    if (!cli.run("train -c \"" + cfg + "\" -d \"" + data + "\" --seed 3 -o \"" + (dir / run).string() + "\"",
                 std::string("determinism/train_") + run + ".log")) {
      return {false, std::string("train run ") + run + " failed"};
    }
  }
  int compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    const std::string ext = rel.extension().string();
    if (ext != ".ckpt" && rel.filename() != "metric_report.csv" && rel.filename() != "epoch_report.csv") continue;
    ++compared;
    if (!fs::exists(dir / "b" / rel)) {
      ++differing;
      continue;
    }
    std::string x = slurp(e.path()), y = slurp(dir / "b" / rel);
    if (rel.filename() == "epoch_report.csv") {
      // Wall-clock seconds are the last column.
      auto strip = [](const std::string& s) {
        std::istringstream in(s);
        std::string line, out;
        while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
        return out;
      };
      x = strip(x);
      y = strip(y);
    }
    differing += x != y;
  }
  return {compared >= 4 && differing == 0,
          std::to_string(compared) + " files compared (checkpoints and reports), " + std::to_string(differing) +
              " differ"};
}

struct ModeRun {
  bool ok = false;
  MetricReport report;
  double seconds = 0.0;
};

class DeskSuite {
 public:
  DeskSuite(const Cli& cli, std::string config) : cli_(cli), config_(std::move(config)) {}

  const ModeRun& mode(const std::string& m) {
    auto it = runs_.find(m);
    if (it != runs_.end()) return it->second;
    ModeRun r;
    if (ensure_data()) {
      const auto t0 = std::chrono::steady_clock::now();
      const fs::path out = cli_.work / "desk" / m;
      fs::remove_all(out);
      r.ok = cli_.run("train -c \"" + config_ + "\" -d \"" + data().string() + "\" --mode " + m + " -o \"" +
                          out.string() + "\"",
                      "desk/train_" + m + ".log");
      r.seconds = seconds_since(t0);
      if (r.ok) r.report = parse_metric_report(slurp(out / "metric_report.csv"));
      std::cerr << "  trained " << m << " in " << fmt("%.0f", r.seconds) << " s\n";
    }
    return runs_.emplace(m, std::move(r)).first->second;
  }

 private:
  fs::path data() const { return cli_.work / "desk" / "data"; }

  bool ensure_data() {
    if (data_ready_) return *data_ready_;
    fs::remove_all(cli_.work / "desk");
    fs::create_directories(cli_.work / "desk");
    data_ready_ = cli_.run("gen-data -c \"" + config_ + "\" -o \"" + data().string() + "\"", "desk/gen.log");
    return *data_ready_;
  }

  const Cli& cli_;
  std::string config_;
  std::optional<bool> data_ready_;
  std::map<std::string, ModeRun> runs_;
};

std::string row_text(const MetricRow& r) {
  return fmt("%.3g", r.mean) + " [" + fmt("%.3g", r.ci_low) + ", " + fmt("%.3g", r.ci_high) + "]";
}

// 9. RTR against IL-only on long-tail collisions and nominal FDE.
Outcome directional(DeskSuite& suite) {
  const ModeRun& rtr = suite.mode("RTR");
  const ModeRun& il = suite.mode("IL");
  if (!rtr.ok || !il.ok) return {false, "training failed"};
  const MetricRow& rc = rtr.report.at("longtail_collision_pct");
  const MetricRow& ic = il.report.at("longtail_collision_pct");
  const double rf = rtr.report.at("nominal_fde").mean;
  const double ifde = il.report.at("nominal_fde").mean;
  const bool separated = rc.ci_high < ic.ci_low;
  const bool fde_close = std::abs(rf - ifde) <= 0.25 * ifde;
  return {separated && fde_close, "long-tail collision % RTR " + row_text(rc) + " vs IL " + row_text(ic) +
                                      "; nominal FDE RTR " + fmt("%.3f", rf) + " m vs IL " + fmt("%.3f", ifde) +
                                      " m; " + fmt("%.0f", rtr.seconds + il.seconds) + " s"};
}

// 10. Baseline ordering: RL below BC on long-tail collisions, BC and IL below RL on nominal FDE.
Outcome baseline_sanity(DeskSuite& suite) {
  const ModeRun& rl = suite.mode("RL");
  const ModeRun& bc = suite.mode("BC");
  const ModeRun& il = suite.mode("IL");
  if (!rl.ok || !bc.ok || !il.ok) return {false, "training failed"};
  const double rl_col = rl.report.at("longtail_collision_pct").mean;
  const double bc_col = bc.report.at("longtail_collision_pct").mean;
  const double rl_fde = rl.report.at("nominal_fde").mean;
  const double bc_fde = bc.report.at("nominal_fde").mean;
  const double il_fde = il.report.at("nominal_fde").mean;
  return {rl_col < bc_col && bc_fde < rl_fde && il_fde < rl_fde,
          "long-tail collision % RL " + fmt("%.1f", rl_col) + " vs BC " + fmt("%.1f", bc_col) + "; nominal FDE BC " +
              fmt("%.2f", bc_fde) + ", IL " + fmt("%.2f", il_fde) + ", RL " + fmt("%.2f", rl_fde) + " m"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli_path = CLOSEDLOOP_CLI_PATH;
  std::string desk_config = CLOSEDLOOP_DESK_CONFIG;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", cli_path, "Path of the closedloop executable");
  app.add_option("--desk-config", desk_config, "Configuration of the desk-scale suite");
  app.add_option("--work", work, "Scratch directory for CLI runs");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const Cli cli{cli_path, fs::absolute(work)};
  fs::create_directories(cli.work);
  DeskSuite suite(cli, desk_config);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"dynamics exactness", dynamics_exactness},
      {"factorization equivalence", factorization},
      {"GAE oracle", gae_oracle},
      {"collision oracle", collision_oracle},
      {"JSD suite", jsd_suite},
      {"reward semantics", reward_semantics},
      {"determinism", [&] { return determinism(cli); }},
      {"directional end-to-end", [&] { return directional(suite); }},
      {"baseline-mode sanity", [&] { return baseline_sanity(suite); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[k].first << "): " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
