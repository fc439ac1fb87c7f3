#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace closedloop {

struct AdamWConfig {
  double learning_rate = 1e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global-norm clipping threshold; 0 disables clipping.
  double grad_clip_norm = 1.0;
};

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

struct StepReport {
  bool applied = false;
  double grad_norm = 0.0;
  /// Factor applied to the gradient by clipping (1 when unclipped).
  double clip_scale = 1.0;
};

double global_norm(std::span<const double> g);

/// Clips the gradient to the global norm bound, then applies AdamW with
/// decoupled weight decay. A non-finite gradient leaves everything untouched
/// and returns applied = false.
StepReport optimizer_step(std::span<double> params, std::span<const double> gradient, const AdamWConfig& cfg,
                          AdamWState& state);

/// base * factor^(epoch / every), epochs counted from 0.
double scheduled_learning_rate(double base, double factor, int every, int epoch);

}  // namespace closedloop
