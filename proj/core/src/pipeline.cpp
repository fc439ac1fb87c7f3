#include "closedloop/pipeline.hpp"

#include <cstdio>

#include "closedloop/error.hpp"
#include "closedloop/parallel.hpp"

namespace closedloop {

namespace {

std::string numbered(const std::string& prefix, std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", k);
  return prefix + "_" + buf;
}

std::vector<ScenarioSpec> nominal_set(const RunConfig& cfg, int count, std::uint64_t seed, const std::string& prefix) {
  NominalConfig nc;
  nc.log_ticks = cfg.data.nominal_ticks;
  nc.history = cfg.features.history;
  nc.dt = cfg.dt;
  std::vector<ScenarioSpec> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t k) {
    out[k] = generate_nominal_scenario(nc, static_cast<int>(k % 2), derive_seed(seed, k), cfg.oracle, cfg.bounds);
    out[k].id = numbered(prefix, k);
  });
  return out;
}

std::vector<ScenarioSpec> longtail_set(const RunConfig& cfg, const std::vector<ScenarioFamily>& families, int count,
                                       std::uint64_t seed, const std::string& prefix) {
  LongTailConfig lc;
  lc.history = cfg.features.history;
  lc.dt = cfg.dt;
  std::vector<ScenarioSpec> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t k) {
    LogicalScenario logical = default_logical_scenario(families[k % families.size()]);
    logical.trigger = cfg.data.trigger;
    out[k] = sample_concrete_scenario(logical, derive_seed(seed, k), lc);
    out[k].id = numbered(prefix, k);
  });
  return out;
}

std::vector<std::vector<ScenarioSpec>*> members(Datasets& d) {
  return {&d.nominal_train, &d.nominal_heldout, &d.longtail_train, &d.longtail_heldout, &d.longtail_ood};
}

}  // namespace

Datasets generate_datasets(const RunConfig& cfg, std::uint64_t seed) {
  cfg.data.validate();
  const std::uint64_t root = derive_seed(seed, "scenario-gen");
  Datasets d;
  d.nominal_train = nominal_set(cfg, cfg.data.nominal_train, derive_seed(root, "nominal-train"), "nominal_train");
  d.nominal_heldout = nominal_set(cfg, cfg.data.nominal_heldout, derive_seed(root, "nominal-heldout"), "nominal_heldout");
  d.longtail_train = longtail_set(cfg, cfg.data.train_families, cfg.data.longtail_train,
                                  derive_seed(root, "longtail-train"), "longtail_train");
  d.longtail_heldout = longtail_set(cfg, cfg.data.train_families, cfg.data.longtail_heldout,
                                    derive_seed(root, "longtail-heldout"), "longtail_heldout");
  d.longtail_ood = longtail_set(cfg, {cfg.data.ood_family}, cfg.data.longtail_ood, derive_seed(root, "longtail-ood"),
                                "longtail_ood");
  return d;
}

void save_datasets(const std::filesystem::path& dir, const Datasets& d) {
  Datasets copy = d;
  const auto sets = members(copy);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    save_scenario_set(dir / kDatasetFiles[k], ScenarioSet{*sets[k]});
  }
}

Datasets load_datasets(const std::filesystem::path& dir) {
  Datasets d;
  const auto sets = members(d);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    *sets[k] = load_scenario_set(dir / kDatasetFiles[k]).scenarios;
  }
  return d;
}

MetricReport evaluate_checkpoint(const RunConfig& cfg, const ParameterSet& policy, const ParameterSet& value,
                                 const Datasets& data, std::uint64_t seed) {
  PolicyMixture mixture;
  mixture.policy = &policy;
  mixture.value = &value;
  mixture.features = cfg.features;
  mixture.bounds = cfg.bounds;
  mixture.oracle = cfg.oracle;
  EvaluationSets sets{data.nominal_heldout, data.longtail_heldout, data.longtail_ood};
  return evaluate_policy(mixture, sets, cfg, derive_seed(seed, "eval"));
}

TrainingResult run_training(const RunConfig& cfg, const Datasets& data, std::uint64_t seed,
                            const std::function<void(const EpochReport&, const TrainerState&)>& on_epoch) {
  check_training_data(cfg.train, data.nominal_train, data.longtail_train);
  Rng init_rng(derive_seed(seed, "init"));
  TrainingResult result{make_trainer_state(cfg, init_rng), {}, {}};
  Rng train_rng(derive_seed(seed, "optimizer"));
  for (int e = 0; e < cfg.train.total_epochs; ++e) {
    result.epochs.push_back(train_epoch(cfg, data.nominal_train, data.longtail_train, result.state, train_rng));
    if (on_epoch) on_epoch(result.epochs.back(), result.state);
  }
  result.metrics = evaluate_checkpoint(cfg, result.state.policy, result.state.value, data, seed);
  return result;
}

}  // namespace closedloop
