#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "closedloop/rng.hpp"
#include "closedloop/scenario.hpp"
#include "closedloop/simulator.hpp"

namespace closedloop {

/// Tick index reached after `horizon_s` seconds.
int horizon_ticks(double horizon_s, double dt);

/// Per-agent distance between simulated and ground-truth positions at the
/// horizon. Throws when either trajectory is too short.
std::vector<double> fde(const Trajectory& sim, const ExpertTrajectory& gt, double horizon_s = 5.0);

struct TrackError {
  double ate = 0.0;  // along-track
  double cte = 0.0;  // cross-track
};

/// The simulated horizon position projected onto each agent's ground-truth
/// path (positions of ticks 0..horizon, extended straight beyond its end).
/// Throws GeometryError on a degenerate path.
std::vector<TrackError> ate_cte(const Trajectory& sim, const ExpertTrajectory& gt, double horizon_s = 5.0);

enum class HistogramFeature { acceleration, speed, lateral_deviation, lead_distance };
std::string to_string(HistogramFeature f);
inline constexpr HistogramFeature kHistogramFeatures[] = {HistogramFeature::acceleration, HistogramFeature::speed,
                                                          HistogramFeature::lateral_deviation,
                                                          HistogramFeature::lead_distance};

/// Uniform bins; samples outside the range land in the edge bins.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> counts;

  Histogram() = default;
  Histogram(double lo_, double hi_, int bins);

  int bins() const { return static_cast<int>(counts.size()); }
  double bin_left(int b) const;
  double bin_right(int b) const { return bin_left(b + 1); }
  void add(double x);
  double total() const;
  std::vector<double> mass() const;
  bool same_binning(const Histogram& o) const { return lo == o.lo && hi == o.hi && bins() == o.bins(); }
};

Histogram default_histogram(HistogramFeature f);

/// Samples every non-hero agent of every trajectory; trajectories must carry
/// their map. Throws when no sample exists.
Histogram feature_histogram(std::span<const Trajectory> trajs, HistogramFeature f, const Histogram& bins);
/// Same, without the empty check, for accumulation.
void accumulate_histogram(const Trajectory& traj, HistogramFeature f, Histogram& h);

/// Jensen-Shannon divergence in nats between normalized histograms.
double jsd(const Histogram& p, const Histogram& q);
double jsd(std::span<const double> p, std::span<const double> q);

struct InfractionCounts {
  int agents = 0;
  int collided = 0;
  int offroad = 0;
};
InfractionCounts count_infractions(const Trajectory& traj);

struct InfractionRate {
  double collision_pct = 0.0;
  double offroad_pct = 0.0;
};

/// Share of non-hero agents with at least one infraction of each kind.
InfractionRate infraction_rate(std::span<const Trajectory> trajs);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap of the mean over snippets.
Interval bootstrap_ci(std::span<const double> values, int n_resamples, Rng& rng, double level = 0.95);

/// Percentile bootstrap of an arbitrary statistic; `stat` receives the
/// resampled snippet indices.
Interval bootstrap_statistic(std::size_t snippets, const std::function<double(std::span<const std::size_t>)>& stat,
                             int n_resamples, Rng& rng, double level = 0.95);

}  // namespace closedloop
