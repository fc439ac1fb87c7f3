#pragma once

#include <array>
#include <filesystem>
#include <span>

#include "closedloop/dynamics.hpp"
#include "closedloop/features.hpp"
#include "closedloop/network.hpp"
#include "closedloop/rng.hpp"

namespace closedloop {

/// Independent normals over (accel, steer).
struct ActionDistribution {
  std::array<double, 2> mu{};
  std::array<double, 2> sigma{};
};

inline constexpr double kSigmaFloor = 1e-4;
/// Raw network outputs: mu_accel, mu_steer, pre-softplus sigma_accel, sigma_steer,
/// all in network units.
inline constexpr int kPolicyOutputs = 4;
/// Physical size of one network unit: m/s^2 for acceleration, rad for steering.
inline constexpr std::array<double, 2> kActionScale{1.0, 0.01};

double softplus(double x);
double inverse_softplus(double y);

ActionDistribution distribution_from_raw(std::span<const double> raw);
/// Chain rule from (dL/dmu, dL/dsigma) to dL/draw.
std::array<double, kPolicyOutputs> raw_gradient(std::span<const double> raw, const std::array<double, 2>& d_mu,
                                                const std::array<double, 2>& d_sigma);

struct NetworkConfig {
  std::vector<int> hidden{64, 64, 64};
  /// Initial policy spread; the steering spread is kept small because the
  /// heading responds to steering with a gain of v*dt/L per tick.
  double init_sigma_accel = 2.0;
  double init_sigma_steer = 0.005;
  /// Scale applied to the Glorot-initialized output layer.
  double output_init_scale = 0.01;
};

ParameterSet make_policy_parameters(int feature_dim, const NetworkConfig& cfg, Rng& rng);
ParameterSet make_value_parameters(int feature_dim, const NetworkConfig& cfg, Rng& rng);

ActionDistribution policy_forward(const ParameterSet& params, std::span<const double> features,
                                  MlpCache* cache = nullptr);
double value_forward(const ParameterSet& params, std::span<const double> features, MlpCache* cache = nullptr);

enum class SampleMode { mean, reparameterized };

struct SampledAction {
  AgentAction applied;  // after clipping to bounds
  AgentAction raw;      // before clipping; log-probabilities refer to this
  std::array<double, 2> noise{};
  bool accel_clipped = false;
  bool steer_clipped = false;
};

SampledAction sample_action(const ActionDistribution& dist, Rng& rng, SampleMode mode, const ActionBounds& bounds);
/// Reparameterized sample with caller-provided standard-normal noise.
SampledAction sample_action(const ActionDistribution& dist, const std::array<double, 2>& noise,
                            const ActionBounds& bounds);

/// Sum over both dimensions of the normal log density.
double log_prob(const ActionDistribution& dist, const AgentAction& a);

struct LogProbGradient {
  std::array<double, 2> mu{};
  std::array<double, 2> sigma{};
};
LogProbGradient log_prob_gradient(const ActionDistribution& dist, const AgentAction& a);

/// Both networks plus the feature layout they were trained with.
struct Checkpoint {
  FeatureConfig features;
  ParameterSet policy;
  ParameterSet value;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on a bad header or when the stored feature dimension
/// differs from `expected_feature_dim` (pass a negative value to skip).
Checkpoint load_checkpoint(const std::filesystem::path& path, int expected_feature_dim = -1);

}  // namespace closedloop
