#include "closedloop/optimizer.hpp"

#include <cmath>

#include "closedloop/error.hpp"

namespace closedloop {

double global_norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

StepReport optimizer_step(std::span<double> params, std::span<const double> gradient, const AdamWConfig& cfg,
                          AdamWState& state) {
  if (gradient.size() != params.size()) throw Error("optimizer_step: gradient size does not match parameters");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw Error("optimizer_step: moment buffers do not match parameters");

  StepReport report;
  report.grad_norm = global_norm(gradient);
  if (!std::isfinite(report.grad_norm)) return report;
  if (cfg.grad_clip_norm > 0.0 && report.grad_norm > cfg.grad_clip_norm) {
    report.clip_scale = cfg.grad_clip_norm / report.grad_norm;
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = gradient[k] * report.clip_scale;
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[k] / bc1;
    const double vhat = state.v[k] / bc2;
    params[k] -= cfg.learning_rate * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * params[k]);
  }
  report.applied = true;
  return report;
}

double scheduled_learning_rate(double base, double factor, int every, int epoch) {
  if (every < 1) throw Error("learning-rate decay interval must be >= 1");
  return base * std::pow(factor, epoch / every);
}

}  // namespace closedloop
