#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "closedloop/imitation.hpp"
#include "closedloop/simulator.hpp"

using namespace closedloop;

namespace {

struct Problem {
  ScenarioSpec spec;
  ParameterSet policy;
  ImitationOptions options;
};

Problem small_problem(std::uint64_t seed, int horizon) {
  Problem p;
  p.options.features.history = 3;
  p.options.features.neighbors = 2;
  p.options.horizon = horizon;
  NominalConfig nc;
  nc.agents_per_lane = {1.0, 1.0};
  nc.history = 3;
  nc.log_ticks = horizon;
  p.spec = generate_nominal_scenario(nc, static_cast<int>(seed % 2), seed);
  NetworkConfig net;
  net.hidden = {16, 16};
  net.output_init_scale = 0.5;
  Rng rng(seed + 1000);
  p.policy = make_policy_parameters(p.options.features.dim(), net, rng);
  return p;
}

double loss_at(const Problem& p, const std::vector<double>& values) {
  ParameterSet q = p.policy;
  q.values = values;
  return il_loss(p.spec, q, p.options).loss;
}

}  // namespace

TEST_CASE("huber is quadratic inside delta and linear outside") {
  CHECK(huber(0.5, 1.0) == doctest::Approx(0.125));
  CHECK(huber(3.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber(-3.0, 1.0) == doctest::Approx(2.5));
  CHECK(huber(1.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("il_loss gradient matches central differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Problem p = small_problem(seed, 6);
    const LossAndGradient lg = il_loss(p.spec, p.policy, p.options);
    REQUIRE(lg.gradient.size() == p.policy.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < p.policy.size(); ++k) {
      // Five-point stencil keeps truncation and rounding error well below the tolerance.
      const double h = 1e-4 * std::max(1.0, std::abs(p.policy.values[k]));
      auto at = [&](double offset) {
        std::vector<double> v = p.policy.values;
        v[k] += offset;
        return loss_at(p, v);
      };
      const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      const double err = std::abs(fd - lg.gradient[k]) / std::max(1e-6, std::abs(fd) + std::abs(lg.gradient[k]));
      worst = std::max(worst, err);
    }
    CHECK(worst < 1e-4);
  }
}
