#include "closedloop/policy.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "closedloop/error.hpp"
#include "closedloop/file_util.hpp"

namespace closedloop {

double softplus(double x) {
  // log(1 + e^x) without overflow for large x.
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw Error("inverse_softplus needs a positive argument");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ActionDistribution distribution_from_raw(std::span<const double> raw) {
  if (raw.size() != kPolicyOutputs) throw Error("policy head must have four outputs");
  ActionDistribution d;
  for (int k = 0; k < 2; ++k) {
    d.mu[k] = kActionScale[k] * raw[k];
    d.sigma[k] = kActionScale[k] * softplus(raw[2 + k]) + kSigmaFloor;
  }
  return d;
}

std::array<double, kPolicyOutputs> raw_gradient(std::span<const double> raw, const std::array<double, 2>& d_mu,
                                                const std::array<double, 2>& d_sigma) {
  return {d_mu[0] * kActionScale[0], d_mu[1] * kActionScale[1], d_sigma[0] * kActionScale[0] * sigmoid(raw[2]),
          d_sigma[1] * kActionScale[1] * sigmoid(raw[3])};
}

ParameterSet make_policy_parameters(int feature_dim, const NetworkConfig& cfg, Rng& rng) {
  ParameterSet p(MlpShape{feature_dim, cfg.hidden, kPolicyOutputs});
  init_mlp(p.shape, p.values, rng);
  const int last = p.shape.layer_count() - 1;
  const std::size_t w0 = p.shape.weight_offset(last);
  for (std::size_t k = w0; k < p.shape.bias_offset(last); ++k) p.values[k] *= cfg.output_init_scale;
  double* bias = p.values.data() + p.shape.bias_offset(last);
  bias[2] = inverse_softplus((cfg.init_sigma_accel - kSigmaFloor) / kActionScale[0]);
  bias[3] = inverse_softplus((cfg.init_sigma_steer - kSigmaFloor) / kActionScale[1]);
  return p;
}

ParameterSet make_value_parameters(int feature_dim, const NetworkConfig& cfg, Rng& rng) {
  ParameterSet p(MlpShape{feature_dim, cfg.hidden, 1});
  init_mlp(p.shape, p.values, rng);
  const int last = p.shape.layer_count() - 1;
  for (std::size_t k = p.shape.weight_offset(last); k < p.shape.bias_offset(last); ++k) {
    p.values[k] *= cfg.output_init_scale;
  }
  return p;
}

ActionDistribution policy_forward(const ParameterSet& params, std::span<const double> features, MlpCache* cache) {
  if (params.shape.output != kPolicyOutputs) throw Error("policy parameters must have four outputs");
  if (static_cast<int>(features.size()) != params.shape.input) {
    throw Error("policy feature dimension " + std::to_string(features.size()) + " does not match network input " +
                std::to_string(params.shape.input));
  }
  if (cache != nullptr) {
    mlp_forward(params.shape, params.values, features, *cache);
    return distribution_from_raw(cache->output());
  }
  const auto raw = mlp_forward(params.shape, params.values, features);
  return distribution_from_raw(raw);
}

double value_forward(const ParameterSet& params, std::span<const double> features, MlpCache* cache) {
  if (params.shape.output != 1) throw Error("value parameters must have one output");
  if (static_cast<int>(features.size()) != params.shape.input) {
    throw Error("value feature dimension " + std::to_string(features.size()) + " does not match network input " +
                std::to_string(params.shape.input));
  }
  if (cache != nullptr) {
    mlp_forward(params.shape, params.values, features, *cache);
    return cache->output()[0];
  }
  return mlp_forward(params.shape, params.values, features)[0];
}

SampledAction sample_action(const ActionDistribution& dist, const std::array<double, 2>& noise,
                            const ActionBounds& bounds) {
  SampledAction out;
  out.noise = noise;
  out.raw = {dist.mu[0] + dist.sigma[0] * noise[0], dist.mu[1] + dist.sigma[1] * noise[1]};
  out.applied = bounds.clip(out.raw);
  out.accel_clipped = out.applied.accel != out.raw.accel;
  out.steer_clipped = out.applied.steer != out.raw.steer;
  return out;
}

SampledAction sample_action(const ActionDistribution& dist, Rng& rng, SampleMode mode, const ActionBounds& bounds) {
  if (mode == SampleMode::mean) return sample_action(dist, {0.0, 0.0}, bounds);
  const double z0 = rng.standard_normal();
  const double z1 = rng.standard_normal();
  return sample_action(dist, {z0, z1}, bounds);
}

double log_prob(const ActionDistribution& dist, const AgentAction& a) {
  const std::array<double, 2> x{a.accel, a.steer};
  double lp = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double z = (x[d] - dist.mu[d]) / dist.sigma[d];
    lp += -0.5 * z * z - std::log(dist.sigma[d]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

LogProbGradient log_prob_gradient(const ActionDistribution& dist, const AgentAction& a) {
  const std::array<double, 2> x{a.accel, a.steer};
  LogProbGradient g;
  for (int d = 0; d < 2; ++d) {
    const double s = dist.sigma[d];
    const double r = x[d] - dist.mu[d];
    g.mu[d] = r / (s * s);
    g.sigma[d] = r * r / (s * s * s) - 1.0 / s;
  }
  return g;
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'L', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::string& out, const T& v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw FormatError("checkpoint truncated");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

void put_params(std::string& out, const ParameterSet& p) {
  put<std::int32_t>(out, p.shape.input);
  put<std::int32_t>(out, static_cast<std::int32_t>(p.shape.hidden.size()));
  for (int h : p.shape.hidden) put<std::int32_t>(out, h);
  put<std::int32_t>(out, p.shape.output);
  put<std::uint64_t>(out, p.step);
  put<std::uint64_t>(out, p.values.size());
  for (double v : p.values) put<double>(out, v);
}

ParameterSet get_params(Reader& in) {
  MlpShape shape;
  shape.input = in.get<std::int32_t>();
  const auto layers = in.get<std::int32_t>();
  if (layers < 0 || layers > 64) throw FormatError("checkpoint has an implausible layer count");
  shape.hidden.clear();
  for (int k = 0; k < layers; ++k) shape.hidden.push_back(in.get<std::int32_t>());
  shape.output = in.get<std::int32_t>();
  ParameterSet p(shape);
  p.step = in.get<std::uint64_t>();
  const auto count = in.get<std::uint64_t>();
  if (count != p.values.size()) throw FormatError("checkpoint parameter count does not match its shape");
  for (double& v : p.values) v = in.get<double>();
  return p;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::int32_t>(out, ckpt.features.dim());
  put<std::int32_t>(out, ckpt.features.history);
  put<std::int32_t>(out, ckpt.features.neighbors);
  put<double>(out, ckpt.features.neighbor_radius);
  put<double>(out, ckpt.features.hero_radius);
  put<double>(out, ckpt.features.lead_half_width);
  put_params(out, ckpt.policy);
  put_params(out, ckpt.value);
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, int expected_feature_dim) {
  const std::string data = read_file(path);
  if (data.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(data.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  Reader in(data);
  for (std::size_t k = 0; k < sizeof(kCheckpointMagic); ++k) in.get<char>();
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
  }
  Checkpoint ckpt;
  const int dim = in.get<std::int32_t>();
  ckpt.features.history = in.get<std::int32_t>();
  ckpt.features.neighbors = in.get<std::int32_t>();
  ckpt.features.neighbor_radius = in.get<double>();
  ckpt.features.hero_radius = in.get<double>();
  ckpt.features.lead_half_width = in.get<double>();
  if (dim != ckpt.features.dim()) throw FormatError("checkpoint feature layout is inconsistent");
  if (expected_feature_dim >= 0 && dim != expected_feature_dim) {
    throw FormatError("checkpoint feature dimension " + std::to_string(dim) + " does not match expected " +
                      std::to_string(expected_feature_dim));
  }
  ckpt.policy = get_params(in);
  ckpt.value = get_params(in);
  if (!in.done()) throw FormatError("checkpoint has trailing bytes");
  if (ckpt.policy.shape.input != dim || ckpt.value.shape.input != dim) {
    throw FormatError("checkpoint network input does not match its feature dimension");
  }
  return ckpt;
}

}  // namespace closedloop
