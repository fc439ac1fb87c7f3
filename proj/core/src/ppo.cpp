#include "closedloop/ppo.hpp"

#include <algorithm>
#include <cmath>

#include "closedloop/error.hpp"
#include "closedloop/policy.hpp"

namespace closedloop {

double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  double w = 1.0;
  for (double r : rewards) {
    g += w * r;
    w *= gamma;
  }
  return g;
}

std::vector<double> compute_value_targets(const std::vector<std::vector<double>>& rewards, double gamma) {
  std::vector<double> out;
  out.reserve(rewards.size());
  for (const auto& r : rewards) out.push_back(discounted_return(r, gamma));
  return out;
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                                double gae_lambda) {
  if (values.size() != rewards.size() + 1) throw Error("compute_gae: need one more value than rewards");
  std::vector<double> adv(rewards.size(), 0.0);
  double next = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    const double delta = rewards[k] + gamma * values[k + 1] - values[k];
    next = delta + gamma * gae_lambda * next;
    adv[k] = next;
  }
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoResult ppo_losses(std::span<const PpoSample> batch, const ParameterSet& policy, const ParameterSet& value,
                     double clip_eps, bool normalize) {
  if (batch.empty()) throw Error("ppo_losses: empty batch");
  PpoResult out;
  out.policy_gradient.assign(policy.size(), 0.0);
  out.value_gradient.assign(value.size(), 0.0);

  std::vector<double> adv;
  adv.reserve(batch.size());
  for (const PpoSample& s : batch) adv.push_back(s.advantage);
  if (normalize && adv.size() > 1) {
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    if (var > 0.0) {
      const double sd = std::sqrt(var);
      for (double& a : adv) a = (a - mean) / sd;
      out.normalized = true;
    }
  }

  MlpCache cache;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const PpoSample& s = batch[k];
    const ActionDistribution d = policy_forward(policy, s.features, &cache);
    const double lp = log_prob(d, s.action);
    const double ratio = std::exp(lp - s.old_log_prob);
    const double a = adv[k];
    const double unclipped = ratio * a;
    const double surrogate = clipped_surrogate(ratio, a, clip_eps);
    out.surrogate += surrogate;
    // The gradient flows only through the unclipped branch when it is the
    // active minimum.
    if (unclipped <= surrogate) {
      const LogProbGradient lg = log_prob_gradient(d, s.action);
      const double w = -a * ratio;
      const auto g = raw_gradient(cache.output(), {w * lg.mu[0], w * lg.mu[1]}, {w * lg.sigma[0], w * lg.sigma[1]});
      mlp_backward(policy.shape, policy.values, cache, g, out.policy_gradient, {});
    } else {
      ++out.clipped;
    }

    const double v = value_forward(value, s.features, &cache);
    const double err = v - s.value_target;
    out.value_loss += err * err;
    const double gv[] = {2.0 * err};
    mlp_backward(value.shape, value.values, cache, gv, out.value_gradient, {});
  }
  return out;
}

}  // namespace closedloop
