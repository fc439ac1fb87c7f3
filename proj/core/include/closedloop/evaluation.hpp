#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "closedloop/config.hpp"
#include "closedloop/metrics.hpp"
#include "closedloop/simulator.hpp"

namespace closedloop {

struct MetricRow {
  std::string metric;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;

  const MetricRow* find(const std::string& metric) const;
  /// Throws when the metric is absent.
  const MetricRow& at(const std::string& metric) const;
  void append(const MetricReport& other);
};

inline constexpr const char* kMetricReportHeader = "metric,mean,ci_low,ci_high";
std::string format_metric_report(const MetricReport& r);
MetricReport parse_metric_report(const std::string& text);

/// Evaluation rollouts: mean actions, infractions recorded but not terminal.
RolloutOptions evaluation_rollout_options(const RunConfig& cfg, int horizon);

/// Rollouts of every scenario; scenario k uses substream k of `seed`.
std::vector<Trajectory> rollout_set(const PolicyMixture& mixture, std::span<const ScenarioSpec> specs,
                                    const RolloutOptions& options, std::uint64_t seed);

/// Reconstruction (FDE/ATE/CTE), distributional (JSD per feature) and
/// infraction metrics of simulated nominal snippets against their logs.
/// Rows are prefixed with `prefix`.
MetricReport evaluate_nominal(std::span<const Trajectory> sim, std::span<const ScenarioSpec> gt, const EvalConfig& cfg,
                              std::uint64_t seed, const std::string& prefix = "nominal");

/// Collision and off-road rates with bootstrap intervals over scenarios.
MetricReport evaluate_infractions(std::span<const Trajectory> sim, const EvalConfig& cfg, std::uint64_t seed,
                                  const std::string& prefix);

/// Evaluation sets of a standard run.
struct EvaluationSets {
  std::span<const ScenarioSpec> nominal;
  std::span<const ScenarioSpec> longtail;
  std::span<const ScenarioSpec> ood;
};

/// Rolls the mixture out on every set and reports all metrics.
MetricReport evaluate_policy(const PolicyMixture& mixture, const EvaluationSets& sets, const RunConfig& cfg,
                             std::uint64_t seed);

}  // namespace closedloop
