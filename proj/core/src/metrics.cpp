#include "closedloop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "closedloop/error.hpp"

namespace closedloop {

int horizon_ticks(double horizon_s, double dt) {
  if (!(horizon_s > 0.0) || !(dt > 0.0)) throw Error("horizon and tick length must be positive");
  return static_cast<int>(std::lround(horizon_s / dt));
}

namespace {

void check_horizon(const Trajectory& sim, const ExpertTrajectory& gt, int h) {
  if (h >= static_cast<int>(sim.states.size())) {
    throw Error("simulated trajectory " + sim.scenario_id + " ends before the metric horizon");
  }
  if (h >= static_cast<int>(gt.states.size())) {
    throw Error("ground-truth trajectory of " + sim.scenario_id + " ends before the metric horizon");
  }
  if (sim.states[static_cast<std::size_t>(h)].size() != gt.states[static_cast<std::size_t>(h)].size()) {
    throw Error("simulated and ground-truth agent sets differ for " + sim.scenario_id);
  }
}

Vec2 position(const KinematicState& s) { return {s.x, s.y}; }

}  // namespace

std::vector<double> fde(const Trajectory& sim, const ExpertTrajectory& gt, double horizon_s) {
  const int h = horizon_ticks(horizon_s, sim.dt);
  check_horizon(sim, gt, h);
  const auto& a = sim.states[static_cast<std::size_t>(h)];
  const auto& b = gt.states[static_cast<std::size_t>(h)];
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(distance(position(a[i]), position(b[i])));
  return out;
}

std::vector<TrackError> ate_cte(const Trajectory& sim, const ExpertTrajectory& gt, double horizon_s) {
  const int h = horizon_ticks(horizon_s, sim.dt);
  check_horizon(sim, gt, h);
  const std::size_t n = gt.states.front().size();
  std::vector<TrackError> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vec2> path;
    for (int t = 0; t <= h; ++t) {
      const Vec2 p = position(gt.states[static_cast<std::size_t>(t)][i]);
      if (path.empty() || !(p == path.back())) path.push_back(p);
    }
    if (path.size() < 2) throw GeometryError("ground-truth path of agent " + std::to_string(i) + " is degenerate");
    const std::size_t end_vertex = path.size() - 1;
    // Extend the final direction so simulated positions ahead of the path end
    // still project onto it.
    const Vec2 d = path.back() - path[path.size() - 2];
    path.push_back(path.back() + d * (1000.0 / norm(d)));
    const Polyline line(path);
    const PolylineProjection proj = project_onto_polyline(position(sim.states[static_cast<std::size_t>(h)][i]), line);
    out.push_back({std::abs(line.cumulative()[end_vertex] - proj.arclength), std::abs(proj.lateral)});
  }
  return out;
}

std::string to_string(HistogramFeature f) {
  switch (f) {
    case HistogramFeature::acceleration:
      return "acceleration";
    case HistogramFeature::speed:
      return "speed";
    case HistogramFeature::lateral_deviation:
      return "lateral_deviation";
    case HistogramFeature::lead_distance:
      return "lead_distance";
  }
  return "unknown";
}

Histogram::Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), counts(static_cast<std::size_t>(bins), 0.0) {
  if (bins < 1 || !(hi > lo)) throw Error("histogram needs at least one bin over a nonempty range");
}

double Histogram::bin_left(int b) const { return lo + (hi - lo) * b / bins(); }

void Histogram::add(double x) {
  if (std::isnan(x)) return;
  int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins()));
  b = std::clamp(b, 0, bins() - 1);
  counts[static_cast<std::size_t>(b)] += 1.0;
}

double Histogram::total() const {
  double t = 0.0;
  for (double c : counts) t += c;
  return t;
}

std::vector<double> Histogram::mass() const {
  const double t = total();
  std::vector<double> m(counts.size(), 0.0);
  if (t > 0.0) {
    for (std::size_t k = 0; k < counts.size(); ++k) m[k] = counts[k] / t;
  }
  return m;
}

Histogram default_histogram(HistogramFeature f) {
  switch (f) {
    case HistogramFeature::acceleration:
      return Histogram(-6.0, 6.0, 24);
    case HistogramFeature::speed:
      return Histogram(0.0, 40.0, 40);
    case HistogramFeature::lateral_deviation:
      return Histogram(-3.0, 3.0, 24);
    case HistogramFeature::lead_distance:
      return Histogram(0.0, 100.0, 25);
  }
  throw Error("unknown histogram feature");
}

void accumulate_histogram(const Trajectory& traj, HistogramFeature f, Histogram& h) {
  const int n = traj.agent_count();
  if (f == HistogramFeature::acceleration) {
    for (const auto& row : traj.actions) {
      for (int i = 0; i < n; ++i) {
        if (!traj.is_hero(i)) h.add(row[static_cast<std::size_t>(i)].accel);
      }
    }
    return;
  }
  if (f == HistogramFeature::speed) {
    for (const auto& row : traj.states) {
      for (int i = 0; i < n; ++i) {
        if (!traj.is_hero(i)) h.add(row[static_cast<std::size_t>(i)].v);
      }
    }
    return;
  }
  if (!traj.map) throw Error("trajectory " + traj.scenario_id + " has no map attached");
  const LaneGraph& map = *traj.map;
  for (const auto& row : traj.states) {
    for (int i = 0; i < n; ++i) {
      if (traj.is_hero(i)) continue;
      if (f == HistogramFeature::lateral_deviation) {
        const auto loc = map.locate(box_center(row[static_cast<std::size_t>(i)]));
        if (loc) h.add(loc->projection.lateral);
      } else {
        const auto lead = find_lead(map, row, {}, i, 100.0);
        if (lead) h.add(lead->gap);
      }
    }
  }
}

Histogram feature_histogram(std::span<const Trajectory> trajs, HistogramFeature f, const Histogram& bins) {
  Histogram h = bins;
  std::fill(h.counts.begin(), h.counts.end(), 0.0);
  for (const Trajectory& t : trajs) accumulate_histogram(t, f, h);
  if (h.total() == 0.0) throw Error("no samples for the " + to_string(f) + " histogram");
  return h;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("jsd: histograms have different binning");
  double out = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0.0) out += 0.5 * p[k] * std::log(p[k] / m);
    if (q[k] > 0.0) out += 0.5 * q[k] * std::log(q[k] / m);
  }
  return std::clamp(out, 0.0, std::numbers::ln2);
}

double jsd(const Histogram& p, const Histogram& q) {
  if (!p.same_binning(q)) throw Error("jsd: histograms have different binning");
  if (p.total() == 0.0 || q.total() == 0.0) throw Error("jsd: empty histogram");
  const auto pm = p.mass();
  const auto qm = q.mass();
  return jsd(pm, qm);
}

InfractionCounts count_infractions(const Trajectory& traj) {
  InfractionCounts c;
  const int n = traj.agent_count();
  for (int i = 0; i < n; ++i) {
    if (traj.is_hero(i)) continue;
    ++c.agents;
    bool col = false;
    bool off = false;
    for (const auto& row : traj.infractions) {
      col = col || row[static_cast<std::size_t>(i)] == Infraction::collision;
      off = off || row[static_cast<std::size_t>(i)] == Infraction::offroad;
    }
    c.collided += col ? 1 : 0;
    c.offroad += off ? 1 : 0;
  }
  return c;
}

InfractionRate infraction_rate(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw Error("infraction_rate needs at least one trajectory");
  InfractionCounts total;
  for (const Trajectory& t : trajs) {
    const InfractionCounts c = count_infractions(t);
    total.agents += c.agents;
    total.collided += c.collided;
    total.offroad += c.offroad;
  }
  if (total.agents == 0) return {};
  return {100.0 * total.collided / total.agents, 100.0 * total.offroad / total.agents};
}

namespace {

double quantile(std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

}  // namespace

Interval bootstrap_statistic(std::size_t snippets, const std::function<double(std::span<const std::size_t>)>& stat,
                             int n_resamples, Rng& rng, double level) {
  if (snippets < 2) throw Error("bootstrap needs at least two snippets");
  if (n_resamples < 100) throw Error("bootstrap needs at least 100 resamples");
  if (!(level > 0.0 && level < 1.0)) throw Error("bootstrap level must lie in (0, 1)");
  std::vector<std::size_t> idx(snippets);
  for (std::size_t k = 0; k < snippets; ++k) idx[k] = k;
  Interval out;
  out.mean = stat(idx);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    for (std::size_t k = 0; k < snippets; ++k) idx[k] = rng.index(snippets);
    stats.push_back(stat(idx));
  }
  std::sort(stats.begin(), stats.end());
  out.low = quantile(stats, 0.5 * (1.0 - level));
  out.high = quantile(stats, 1.0 - 0.5 * (1.0 - level));
  out.half_width = 0.5 * (out.high - out.low);
  return out;
}

Interval bootstrap_ci(std::span<const double> values, int n_resamples, Rng& rng, double level) {
  return bootstrap_statistic(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        double s = 0.0;
        for (std::size_t k : idx) s += values[k];
        return s / static_cast<double>(idx.size());
      },
      n_resamples, rng, level);
}

}  // namespace closedloop
