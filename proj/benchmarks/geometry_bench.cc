#include <benchmark/benchmark.h>

#include "sealid/geometry.h"

namespace {

void BM_ComputePoints(benchmark::State& state) {
  const sealid::DesignVector x = sealid::midpoint_design();
  for (auto _ : state) benchmark::DoNotOptimize(sealid::compute_points(x));
}
BENCHMARK(BM_ComputePoints);

void BM_Validate(benchmark::State& state) {
  const sealid::DesignVector x = sealid::midpoint_design();
  for (auto _ : state) benchmark::DoNotOptimize(sealid::validate(x));
}
BENCHMARK(BM_Validate);

void BM_Rasterize(benchmark::State& state) {
  const sealid::SealGeometry g = sealid::compute_points(sealid::midpoint_design());
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sealid::rasterize(g, res));
  state.SetItemsProcessed(state.iterations() * res * res);
}
BENCHMARK(BM_Rasterize)->Arg(24)->Arg(102)->Arg(204)->Arg(408);

void BM_Svg(benchmark::State& state) {
  const sealid::SealGeometry g = sealid::compute_points(sealid::midpoint_design());
  for (auto _ : state) benchmark::DoNotOptimize(sealid::to_svg(g, std::nullopt));
}
BENCHMARK(BM_Svg);

}  // namespace
