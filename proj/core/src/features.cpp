#include "closedloop/features.hpp"

namespace closedloop {

void FeatureConfig::validate() const {
  if (history < 1) throw ConfigError("feature history must be at least 1");
  if (neighbors < 0) throw ConfigError("neighbor count must be non-negative");
  if (!(neighbor_radius > 0.0) || !(hero_radius >= 0.0)) throw ConfigError("feature radii must be positive");
  if (!(lead_half_width > 0.0)) throw ConfigError("lead_half_width must be positive");
}

std::vector<double> extract_features(const SceneWindow<double>& w, int agent, const LaneGraph& map,
                                     const FeatureConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.dim()));
  extract_features<double>(w, agent, map, cfg, out);
  return out;
}

}  // namespace closedloop
