#include <benchmark/benchmark.h>

#include <cmath>

#include "closedloop/dynamics.hpp"
#include "closedloop/geometry.hpp"
#include "closedloop/imitation.hpp"
#include "closedloop/policy.hpp"
#include "closedloop/rng.hpp"
#include "closedloop/scenario.hpp"

using namespace closedloop;

static void BM_ObbOverlap(benchmark::State& state) {
  Rng rng(1);
  std::vector<OrientedBox> boxes;
  for (int k = 0; k < 256; ++k) {
    boxes.push_back(OrientedBox::make({rng.uniform(-5, 5), rng.uniform(-2, 2)}, rng.uniform(-M_PI, M_PI), 2.4, 0.9));
  }
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(obb_overlap(boxes[k % 256], boxes[(k * 7 + 3) % 256]));
    ++k;
  }
}
BENCHMARK(BM_ObbOverlap);

static void BM_BicycleStep(benchmark::State& state) {
  KinematicState s;
  s.v = 15.0;
  for (auto _ : state) {
    s = bicycle_step(s, {0.1, 0.01}, 0.5).state;
    if (s.v > 25.0) s.v = 15.0;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_BicycleStep);

static void BM_PolicyForward(benchmark::State& state) {
  const FeatureConfig features;
  NetworkConfig net;
  Rng rng(2);
  const ParameterSet policy = make_policy_parameters(features.dim(), net, rng);
  std::vector<double> x(static_cast<std::size_t>(features.dim()));
  for (double& v : x) v = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(policy_forward(policy, x));
}
BENCHMARK(BM_PolicyForward);

static void BM_IlLoss(benchmark::State& state) {
  ImitationOptions opt;
  opt.horizon = static_cast<int>(state.range(0));
  NominalConfig nc;
  nc.log_ticks = opt.horizon;
  const ScenarioSpec spec = generate_nominal_scenario(nc, 0, 3);
  NetworkConfig net;
  Rng rng(4);
  const ParameterSet policy = make_policy_parameters(opt.features.dim(), net, rng);
  for (auto _ : state) benchmark::DoNotOptimize(il_loss(spec, policy, opt));
  state.SetLabel(std::to_string(spec.agent_count()) + " agents");
}
BENCHMARK(BM_IlLoss)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
