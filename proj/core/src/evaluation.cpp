#include "closedloop/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "closedloop/error.hpp"
#include "closedloop/parallel.hpp"

namespace closedloop {

const MetricRow* MetricReport::find(const std::string& metric) const {
  for (const MetricRow& r : rows) {
    if (r.metric == metric) return &r;
  }
  return nullptr;
}

const MetricRow& MetricReport::at(const std::string& metric) const {
  const MetricRow* r = find(metric);
  if (r == nullptr) throw Error("metric report has no row '" + metric + "'");
  return *r;
}

void MetricReport::append(const MetricReport& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::string format_metric_report(const MetricReport& r) {
  std::string out = kMetricReportHeader;
  out += '\n';
  char buf[128];
  for (const MetricRow& row : r.rows) {
    std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g\n", row.mean, row.ci_low, row.ci_high);
    out += row.metric;
    out += buf;
  }
  return out;
}

MetricReport parse_metric_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricReportHeader) throw FormatError("metric report has a bad header");
  MetricReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    MetricRow row;
    std::string field;
    std::getline(ls, row.metric, ',');
    double* dst[] = {&row.mean, &row.ci_low, &row.ci_high};
    for (double* d : dst) {
      if (!std::getline(ls, field, ',')) throw FormatError("metric report row is short: " + line);
      *d = std::strtod(field.c_str(), nullptr);
    }
    r.rows.push_back(row);
  }
  return r;
}

RolloutOptions evaluation_rollout_options(const RunConfig& cfg, int horizon) {
  RolloutOptions o;
  o.horizon = horizon;
  o.mode = SampleMode::mean;
  o.terminate_on_infraction = false;
  o.reward = RewardMode::sparse;
  o.dt = cfg.dt;
  return o;
}

std::vector<Trajectory> rollout_set(const PolicyMixture& mixture, std::span<const ScenarioSpec> specs,
                                    const RolloutOptions& options, std::uint64_t seed) {
  std::vector<Trajectory> out(specs.size());
  parallel_for(specs.size(), [&](std::size_t k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    out[k] = rollout(mixture, specs[k], options, rng);
  });
  return out;
}

namespace {

MetricRow row_from(const std::string& name, const Interval& iv) { return {name, iv.mean, iv.low, iv.high}; }

// Mean over snippets of per-snippet means, skipping snippets without values.
Interval snippet_mean_ci(const std::vector<std::vector<double>>& per_snippet, const EvalConfig& cfg, Rng& rng) {
  std::vector<double> means;
  for (const auto& v : per_snippet) {
    if (v.empty()) continue;
    double s = 0.0;
    for (double x : v) s += x;
    means.push_back(s / static_cast<double>(v.size()));
  }
  if (means.size() < 2) {
    Interval iv;
    iv.mean = means.empty() ? std::nan("") : means.front();
    iv.low = iv.high = iv.mean;
    return iv;
  }
  return bootstrap_ci(means, cfg.bootstrap_resamples, rng, cfg.ci_level);
}

}  // namespace

MetricReport evaluate_infractions(std::span<const Trajectory> sim, const EvalConfig& cfg, std::uint64_t seed,
                                  const std::string& prefix) {
  if (sim.empty()) throw Error("no trajectories to evaluate for " + prefix);
  std::vector<InfractionCounts> counts;
  for (const Trajectory& t : sim) counts.push_back(count_infractions(t));
  auto rate = [&](bool collision) {
    return [&counts, collision](std::span<const std::size_t> idx) {
      double hit = 0.0;
      double agents = 0.0;
      for (std::size_t k : idx) {
        hit += collision ? counts[k].collided : counts[k].offroad;
        agents += counts[k].agents;
      }
      return agents > 0.0 ? 100.0 * hit / agents : 0.0;
    };
  };
  MetricReport r;
  Rng rng(derive_seed(seed, prefix + "-infractions"));
  if (sim.size() < 2) {
    const InfractionRate ir = infraction_rate(sim);
    r.rows.push_back({prefix + "_collision_pct", ir.collision_pct, ir.collision_pct, ir.collision_pct});
    r.rows.push_back({prefix + "_offroad_pct", ir.offroad_pct, ir.offroad_pct, ir.offroad_pct});
    return r;
  }
  r.rows.push_back(row_from(prefix + "_collision_pct",
                            bootstrap_statistic(sim.size(), rate(true), cfg.bootstrap_resamples, rng, cfg.ci_level)));
  r.rows.push_back(row_from(prefix + "_offroad_pct",
                            bootstrap_statistic(sim.size(), rate(false), cfg.bootstrap_resamples, rng, cfg.ci_level)));
  return r;
}

MetricReport evaluate_nominal(std::span<const Trajectory> sim, std::span<const ScenarioSpec> gt, const EvalConfig& cfg,
                              std::uint64_t seed, const std::string& prefix) {
  if (sim.size() != gt.size()) throw Error("evaluate_nominal: simulated and ground-truth sets differ in size");
  if (sim.empty()) throw Error("evaluate_nominal: empty evaluation set");
  std::vector<std::vector<double>> fde_v(sim.size()), ate_v(sim.size()), cte_v(sim.size());
  std::vector<Trajectory> gt_trajs;
  for (std::size_t k = 0; k < sim.size(); ++k) {
    if (sim[k].scenario_id != gt[k].id) {
      throw Error("evaluate_nominal: trajectory " + sim[k].scenario_id + " does not match scenario " + gt[k].id);
    }
    if (!gt[k].expert_log) throw Error("evaluate_nominal: scenario " + gt[k].id + " has no expert log");
    fde_v[k] = fde(sim[k], *gt[k].expert_log, cfg.fde_horizon_s);
    // Agents that stand still in the log have no path to project onto.
    try {
      for (const TrackError& e : ate_cte(sim[k], *gt[k].expert_log, cfg.fde_horizon_s)) {
        ate_v[k].push_back(e.ate);
        cte_v[k].push_back(e.cte);
      }
    } catch (const GeometryError&) {
    }
    gt_trajs.push_back(expert_trajectory(gt[k]));
  }

  MetricReport r;
  Rng rng(derive_seed(seed, prefix + "-reconstruction"));
  r.rows.push_back(row_from(prefix + "_fde", snippet_mean_ci(fde_v, cfg, rng)));
  r.rows.push_back(row_from(prefix + "_ate", snippet_mean_ci(ate_v, cfg, rng)));
  r.rows.push_back(row_from(prefix + "_cte", snippet_mean_ci(cte_v, cfg, rng)));

  for (HistogramFeature f : kHistogramFeatures) {
    std::vector<Histogram> hs, hg;
    for (std::size_t k = 0; k < sim.size(); ++k) {
      Histogram a = default_histogram(f);
      Histogram b = default_histogram(f);
      accumulate_histogram(sim[k], f, a);
      accumulate_histogram(gt_trajs[k], f, b);
      hs.push_back(std::move(a));
      hg.push_back(std::move(b));
    }
    auto stat = [&](std::span<const std::size_t> idx) {
      Histogram a = default_histogram(f);
      Histogram b = default_histogram(f);
      for (std::size_t k : idx) {
        for (int j = 0; j < a.bins(); ++j) {
          a.counts[static_cast<std::size_t>(j)] += hs[k].counts[static_cast<std::size_t>(j)];
          b.counts[static_cast<std::size_t>(j)] += hg[k].counts[static_cast<std::size_t>(j)];
        }
      }
      if (a.total() == 0.0 || b.total() == 0.0) return 0.0;
      return jsd(a, b);
    };
    Rng frng(derive_seed(seed, prefix + "-jsd-" + to_string(f)));
    if (sim.size() < 2) {
      std::vector<std::size_t> all{0};
      const double v = stat(all);
      r.rows.push_back({prefix + "_jsd_" + to_string(f), v, v, v});
    } else {
      r.rows.push_back(row_from(prefix + "_jsd_" + to_string(f),
                                bootstrap_statistic(sim.size(), stat, cfg.bootstrap_resamples, frng, cfg.ci_level)));
    }
  }
  r.append(evaluate_infractions(sim, cfg, seed, prefix));
  return r;
}

MetricReport evaluate_policy(const PolicyMixture& mixture, const EvaluationSets& sets, const RunConfig& cfg,
                             std::uint64_t seed) {
  MetricReport r;
  if (!sets.nominal.empty()) {
    const int h = horizon_ticks(cfg.eval.fde_horizon_s, cfg.dt);
    const auto trajs = rollout_set(mixture, sets.nominal, evaluation_rollout_options(cfg, h), derive_seed(seed, "nominal"));
    r.append(evaluate_nominal(trajs, sets.nominal, cfg.eval, seed, "nominal"));
  }
  const auto opt = evaluation_rollout_options(cfg, cfg.eval.longtail_horizon);
  if (!sets.longtail.empty()) {
    const auto trajs = rollout_set(mixture, sets.longtail, opt, derive_seed(seed, "longtail"));
    r.append(evaluate_infractions(trajs, cfg.eval, seed, "longtail"));
  }
  if (!sets.ood.empty()) {
    const auto trajs = rollout_set(mixture, sets.ood, opt, derive_seed(seed, "ood"));
    r.append(evaluate_infractions(trajs, cfg.eval, seed, "ood"));
  }
  return r;
}

}  // namespace closedloop
