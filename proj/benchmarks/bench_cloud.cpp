#include <benchmark/benchmark.h>

#include "doorkin/cloud.hpp"
#include "doorkin/doorsim.hpp"
#include "doorkin/grasp.hpp"

namespace {

using namespace doorkin;

PointSet door_roi() {
  const Scene scene = random_scene(1, 0.002);
  return gather(scene.cloud, roi_segment(scene.cloud, scene.boxes[0]));
}

void BM_StatisticalFilter(benchmark::State& state) {
  const PointSet roi = door_roi();
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(remove_statistical_outliers(roi, k, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(roi.size()));
}
BENCHMARK(BM_StatisticalFilter)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_VoxelDownsample(benchmark::State& state) {
  const PointSet roi = door_roi();
  for (auto _ : state) benchmark::DoNotOptimize(voxel_downsample(roi, 0.05));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(roi.size()));
}
BENCHMARK(BM_VoxelDownsample)->Unit(benchmark::kMicrosecond);

void BM_RansacPlane(benchmark::State& state) {
  const PointSet pts = voxel_downsample(door_roi(), 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(ransac_plane(pts, 0.01, 500, 1));
}
BENCHMARK(BM_RansacPlane)->Unit(benchmark::kMicrosecond);

void BM_GraspPipeline(benchmark::State& state) {
  const Scene scene = random_scene(2, 0.002);
  GraspConfig cfg;
  cfg.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_grasp_poses(scene.cloud, scene.boxes, cfg));
}
BENCHMARK(BM_GraspPipeline)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
