#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "closedloop/config.hpp"
#include "closedloop/evaluation.hpp"
#include "closedloop/trainer.hpp"

namespace closedloop {

/// The five scenario sets of a desk-scale run.
struct Datasets {
  std::vector<ScenarioSpec> nominal_train;
  std::vector<ScenarioSpec> nominal_heldout;
  std::vector<ScenarioSpec> longtail_train;
  std::vector<ScenarioSpec> longtail_heldout;
  std::vector<ScenarioSpec> longtail_ood;
};

/// File names inside a dataset directory, in a fixed order.
inline constexpr const char* kDatasetFiles[] = {"nominal_train.json", "nominal_heldout.json", "longtail_train.json",
                                               "longtail_heldout.json", "longtail_ood.json"};

/// Deterministic in (cfg, seed). Nominal snippets alternate between the
/// straight and merge maps; long-tail sets cycle through the families.
Datasets generate_datasets(const RunConfig& cfg, std::uint64_t seed);

void save_datasets(const std::filesystem::path& dir, const Datasets& d);
Datasets load_datasets(const std::filesystem::path& dir);

struct TrainingResult {
  TrainerState state;
  std::vector<EpochReport> epochs;
  MetricReport metrics;
};

/// Runs total_epochs of train_epoch, then evaluates on the held-out sets.
/// `on_epoch` (optional) sees the state after every epoch.
TrainingResult run_training(const RunConfig& cfg, const Datasets& data, std::uint64_t seed,
                            const std::function<void(const EpochReport&, const TrainerState&)>& on_epoch = {});

/// Held-out evaluation of a trained policy (nominal held-out, long-tail
/// held-out and out-of-distribution sets).
MetricReport evaluate_checkpoint(const RunConfig& cfg, const ParameterSet& policy, const ParameterSet& value,
                                 const Datasets& data, std::uint64_t seed);

}  // namespace closedloop
