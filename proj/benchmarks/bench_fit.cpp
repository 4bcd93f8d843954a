#include <benchmark/benchmark.h>

#include "doorkin/doorsim.hpp"
#include "doorkin/kinfit.hpp"
#include "doorkin/modelsel.hpp"
#include "doorkin/priors.hpp"

namespace {

using namespace doorkin;

Trajectory revolute_traj(std::size_t n) {
  ExperimentSettings s;
  s.outlier_rate = 0.2;
  return generate_trajectory(random_revolute_door(1, s), n, 1);
}

void BM_MlesacFit(benchmark::State& state) {
  const Trajectory traj = revolute_traj(static_cast<std::size_t>(state.range(0)));
  MlesacConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mlesac_fit(traj, ModelKind::kPrismatic, cfg));
    benchmark::DoNotOptimize(mlesac_fit(traj, ModelKind::kRevolute, cfg));
  }
}
BENCHMARK(BM_MlesacFit)->Arg(20)->Arg(60)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_SelectModel(benchmark::State& state) {
  const Trajectory traj = revolute_traj(40);
  MlesacConfig cfg;
  cfg.hypotheses = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(select_model(traj, cfg));
}
BENCHMARK(BM_SelectModel)->Arg(50)->Arg(200)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_SelectWithPriors(benchmark::State& state) {
  const ExperimentSettings s;
  const DoorSpec door = random_revolute_door(2, s);
  const PriorStore store = make_prior_store(door, PriorRegime::kBalanced, 2, s);
  const Trajectory fresh = generate_trajectory(door, 10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(select_with_priors(fresh, store, MlesacConfig{}));
}
BENCHMARK(BM_SelectWithPriors)->Unit(benchmark::kMillisecond);

void BM_Opening(benchmark::State& state) {
  const ExperimentSettings s;
  const DoorSpec door = random_revolute_door(3, s);
  for (auto _ : state) benchmark::DoNotOptimize(run_opening(door, OpeningConfig{}));
}
BENCHMARK(BM_Opening)->Unit(benchmark::kMillisecond);

}  // namespace
