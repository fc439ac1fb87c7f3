#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "closedloop/error.hpp"
#include "closedloop/evaluation.hpp"
#include "closedloop/file_util.hpp"
#include "closedloop/pipeline.hpp"
#include "closedloop/trajectory_io.hpp"

#ifndef CLOSEDLOOP_VERSION
#define CLOSEDLOOP_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace closedloop;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  std::string started = utc_now();
  nlohmann::json config;
  std::uint64_t seed = 0;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();

  std::string finish() const {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = CLOSEDLOOP_VERSION;
    j["seed"] = std::to_string(seed);
    j["seeds"] = seeds;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["started_utc"] = started;
    j["finished_utc"] = utc_now();
    return j.dump(2) + "\n";
  }
};

nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : to_key_values(cfg)) j[k] = v;
  return j;
}

// Output directory written under a sibling staging name and renamed into
// place on success, so a failed command leaves nothing behind.
class StagedDir {
 public:
  explicit StagedDir(fs::path target) : target_(std::move(target)) {
    if (fs::exists(target_) && !(fs::is_directory(target_) && fs::is_empty(target_))) {
      throw Error("output directory " + target_.string() + " already exists and is not empty");
    }
    staging_ = target_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }

  void commit() {
    if (fs::exists(target_)) fs::remove(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;

  RunConfig load() const { return load_run_config(config); }
  std::uint64_t root_seed(const RunConfig& cfg) const { return seed.value_or(cfg.train.seed); }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "Run configuration (key = value)")->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Root seed (overrides the config)");
}

int cmd_gen_data(const Common& c, const std::string& out) {
  const RunConfig cfg = c.load();
  Manifest m{"gen-data"};
  m.seed = c.root_seed(cfg);
  m.config = config_json(cfg);
  m.inputs["config"] = c.config;
  m.seeds["scenario-gen"] = std::to_string(derive_seed(m.seed, "scenario-gen"));

  StagedDir dir(out);
  const Datasets d = generate_datasets(cfg, m.seed);
  save_datasets(dir.path(), d);
  for (const char* f : kDatasetFiles) m.outputs[f] = (fs::path(out) / f).string();
  write_file_atomic(dir.path() / "manifest.json", m.finish());
  dir.commit();
  std::cerr << "gen-data: " << d.nominal_train.size() << "+" << d.nominal_heldout.size() << " nominal, "
            << d.longtail_train.size() << "+" << d.longtail_heldout.size() << " long-tail, " << d.longtail_ood.size()
            << " out-of-distribution scenarios -> " << out << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& data_dir, const std::string& out, const std::string& mode) {
  RunConfig cfg = c.load();
  if (!mode.empty()) cfg.train.mode = train_mode_from_string(mode);
  Manifest m{"train"};
  m.seed = c.root_seed(cfg);
  cfg.train.seed = m.seed;
  m.config = config_json(cfg);
  m.inputs["config"] = c.config;
  m.inputs["data"] = data_dir;
  m.seeds["init"] = std::to_string(derive_seed(m.seed, "init"));
  m.seeds["optimizer"] = std::to_string(derive_seed(m.seed, "optimizer"));
  m.seeds["eval"] = std::to_string(derive_seed(m.seed, "eval"));

  const Datasets data = load_datasets(data_dir);
  StagedDir dir(out);
  fs::create_directories(dir.path() / "checkpoints");
  std::string epochs = std::string(kEpochReportHeader) + "\n";
  auto on_epoch = [&](const EpochReport& r, const TrainerState& s) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", r.epoch);
    save_checkpoint(dir.path() / "checkpoints" / name, make_checkpoint(cfg, s));
    epochs += format_epoch_row(r) + "\n";
    write_file_atomic(dir.path() / "epoch_report.csv", epochs);
    std::cerr << "epoch " << r.epoch << "/" << cfg.train.total_epochs << " " << to_string(r.mode)
              << " il=" << r.il_loss << " bc=" << r.bc_loss << " return=" << r.mean_return
              << " collision%=" << r.collision_pct << " (" << r.wall_seconds << " s)\n";
  };
  const TrainingResult result = run_training(cfg, data, m.seed, on_epoch);
  save_checkpoint(dir.path() / "final.ckpt", make_checkpoint(cfg, result.state));
  write_file_atomic(dir.path() / "epoch_report.csv", epochs);
  write_file_atomic(dir.path() / "metric_report.csv", format_metric_report(result.metrics));
  write_file_atomic(dir.path() / "config.cfg", format_run_config(cfg));
  for (const char* f : {"final.ckpt", "epoch_report.csv", "metric_report.csv", "config.cfg", "checkpoints"}) {
    m.outputs[f] = (fs::path(out) / f).string();
  }
  write_file_atomic(dir.path() / "manifest.json", m.finish());
  dir.commit();
  std::cerr << format_metric_report(result.metrics);
  return 0;
}

int cmd_rollout(const Common& c, const std::string& scenarios, const std::string& checkpoint, const std::string& policy,
                const std::string& out, int horizon) {
  const RunConfig cfg = c.load();
  Manifest m{"rollout"};
  m.seed = c.root_seed(cfg);
  m.config = config_json(cfg);
  m.inputs["config"] = c.config;
  m.inputs["scenarios"] = scenarios;

  PolicyMixture mixture;
  mixture.features = cfg.features;
  mixture.bounds = cfg.bounds;
  mixture.oracle = cfg.oracle;
  std::optional<Checkpoint> ckpt;
  if (policy == "expert") {
    mixture.learner = LearnerKind::oracle;
    m.inputs["policy"] = "expert";
  } else if (policy == "checkpoint") {
    if (checkpoint.empty()) throw ConfigError("rollout needs --checkpoint unless --policy expert is given");
    ckpt = load_checkpoint(checkpoint, cfg.features.dim());
    mixture.policy = &ckpt->policy;
    mixture.value = &ckpt->value;
    m.inputs["checkpoint"] = checkpoint;
  } else {
    throw ConfigError("unknown policy '" + policy + "' (expected checkpoint or expert)");
  }

  const ScenarioSet set = load_scenario_set(scenarios);
  std::vector<ScenarioSpec> nominal, longtail;
  for (const ScenarioSpec& s : set.scenarios) (s.origin == ScenarioOrigin::nominal ? nominal : longtail).push_back(s);
  const std::uint64_t seed = derive_seed(m.seed, "rollout");
  m.seeds["rollout"] = std::to_string(seed);

  auto horizon_for = [&](bool is_nominal) {
    if (horizon > 0) return horizon;
    return is_nominal ? horizon_ticks(cfg.eval.fde_horizon_s, cfg.dt) : cfg.eval.longtail_horizon;
  };
  std::vector<Trajectory> trajs = rollout_set(mixture, nominal, evaluation_rollout_options(cfg, horizon_for(true)),
                                              derive_seed(seed, "nominal"));
  const std::vector<Trajectory> lt = rollout_set(
      mixture, longtail, evaluation_rollout_options(cfg, horizon_for(false)), derive_seed(seed, "longtail"));
  trajs.insert(trajs.end(), lt.begin(), lt.end());

  StagedDir dir(out);
  save_trajectories(dir.path(), trajs);
  m.outputs["logs"] = out;
  write_file_atomic(dir.path() / "manifest.json", m.finish());
  dir.commit();
  std::cerr << "rollout: " << trajs.size() << " trajectories -> " << out << "\n";
  return 0;
}

// Logs of a directory matched to scenarios by id, with the scenario maps attached.
std::vector<Trajectory> matched_logs(const std::vector<ScenarioSpec>& specs, const std::string& logs, double dt) {
  std::map<std::string, Trajectory> by_id;
  for (Trajectory& t : load_trajectories(logs, dt)) by_id.emplace(t.scenario_id, std::move(t));
  std::vector<Trajectory> out;
  for (const ScenarioSpec& s : specs) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw FormatError("no trajectory log for scenario " + s.id + " in " + logs);
    it->second.map = s.map;
    out.push_back(std::move(it->second));
  }
  return out;
}

int cmd_eval(const Common& c, const std::string& scenarios, const std::string& logs, const std::string& out) {
  const RunConfig cfg = c.load();
  const std::uint64_t seed = derive_seed(c.root_seed(cfg), "eval");
  const ScenarioSet set = load_scenario_set(scenarios);
  std::vector<ScenarioSpec> nominal, longtail;
  for (const ScenarioSpec& s : set.scenarios) (s.origin == ScenarioOrigin::nominal ? nominal : longtail).push_back(s);

  MetricReport report;
  if (!nominal.empty()) {
    report.append(evaluate_nominal(matched_logs(nominal, logs, cfg.dt), nominal, cfg.eval, seed, "nominal"));
  }
  if (!longtail.empty()) {
    report.append(evaluate_infractions(matched_logs(longtail, logs, cfg.dt), cfg.eval, seed, "longtail"));
  }
  write_file_atomic(out, format_metric_report(report));
  std::cout << format_metric_report(report);
  return 0;
}

std::string histogram_csv(const Histogram& h) {
  std::string s = "bin_left,bin_right,mass\n";
  const std::vector<double> mass = h.mass();
  char buf[96];
  for (int j = 0; j < h.bins(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", h.bin_left(j), h.bin_right(j),
                  mass[static_cast<std::size_t>(j)]);
    s += buf;
  }
  return s;
}

int cmd_export_hist(const Common& c, const std::string& scenarios, const std::string& logs, const std::string& out) {
  const RunConfig cfg = c.load();
  Manifest m{"export-hist"};
  m.seed = c.root_seed(cfg);
  m.config = config_json(cfg);
  m.inputs["config"] = c.config;
  m.inputs["scenarios"] = scenarios;
  const ScenarioSet set = load_scenario_set(scenarios);

  std::vector<Trajectory> gt;
  for (const ScenarioSpec& s : set.scenarios) {
    if (s.expert_log) gt.push_back(expert_trajectory(s));
  }
  std::vector<Trajectory> sim;
  if (!logs.empty()) {
    sim = matched_logs(set.scenarios, logs, cfg.dt);
    m.inputs["logs"] = logs;
  }
  if (gt.empty() && sim.empty()) throw ConfigError("export-hist: no expert logs in the scenarios and no --logs given");

  StagedDir dir(out);
  for (HistogramFeature f : kHistogramFeatures) {
    if (!gt.empty()) {
      write_file_atomic(dir.path() / ("gt_" + to_string(f) + ".csv"),
                        histogram_csv(feature_histogram(gt, f, default_histogram(f))));
    }
    if (!sim.empty()) {
      write_file_atomic(dir.path() / ("sim_" + to_string(f) + ".csv"),
                        histogram_csv(feature_histogram(sim, f, default_histogram(f))));
    }
  }
  m.outputs["histograms"] = out;
  write_file_atomic(dir.path() / "manifest.json", m.finish());
  dir.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop traffic policy training and evaluation"};
  app.set_version_flag("--version", CLOSEDLOOP_VERSION);
  app.require_subcommand(1, 1);

  Common common;
  std::string out, data, mode, scenarios, checkpoint, logs, policy = "checkpoint";
  int horizon = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate nominal and long-tail scenario sets");
  add_common(gen, common);
  gen->add_option("-o,--out", out, "Output dataset directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train a policy and evaluate it on the held-out sets");
  add_common(train, common);
  train->add_option("-d,--data", data, "Dataset directory from gen-data")->required()->check(CLI::ExistingDirectory);
  train->add_option("-o,--out", out, "Output run directory")->required();
  train->add_option("--mode", mode, "Training mode (BC, IL, RL, RL_SHAPED, BC_RL, RTR); overrides the config");

  CLI::App* roll = app.add_subcommand("rollout", "Replay a policy on a scenario set and write trajectory logs");
  add_common(roll, common);
  roll->add_option("-s,--scenarios", scenarios, "Scenario set JSON")->required()->check(CLI::ExistingFile);
  roll->add_option("--checkpoint", checkpoint, "Policy checkpoint")->check(CLI::ExistingFile);
  roll->add_option("--policy", policy, "checkpoint or expert")->check(CLI::IsMember({"checkpoint", "expert"}));
  roll->add_option("--horizon", horizon, "Rollout ticks (default from the config)")->check(CLI::PositiveNumber);
  roll->add_option("-o,--out", out, "Output log directory")->required();

  CLI::App* ev = app.add_subcommand("eval", "Compute a metric report for trajectory logs");
  add_common(ev, common);
  ev->add_option("-s,--scenarios", scenarios, "Scenario set JSON (ground truth)")->required()->check(CLI::ExistingFile);
  ev->add_option("-l,--logs", logs, "Trajectory log directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("-o,--out", out, "Metric report CSV")->required();

  CLI::App* hist = app.add_subcommand("export-hist", "Write feature histograms as CSV");
  add_common(hist, common);
  hist->add_option("-s,--scenarios", scenarios, "Scenario set JSON")->required()->check(CLI::ExistingFile);
  hist->add_option("-l,--logs", logs, "Trajectory log directory")->check(CLI::ExistingDirectory);
  hist->add_option("-o,--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(common, out);
    if (train->parsed()) return cmd_train(common, data, out, mode);
    if (roll->parsed()) return cmd_rollout(common, scenarios, checkpoint, policy, out, horizon);
    if (ev->parsed()) return cmd_eval(common, scenarios, logs, out);
    if (hist->parsed()) return cmd_export_hist(common, scenarios, logs, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
