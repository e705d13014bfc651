#include <benchmark/benchmark.h>

#include "sealid/baseline.h"

namespace {

// Untrained APT regressor with plausible label scaling; timing only.
sealid::ForwardModel apt_model() {
  sealid::ForwardModel m;
  m.stack = sealid::nn::make_mlp({13, 256, 256, 128, 64, 3}, sealid::nn::Activation::kRelu,
                                 sealid::nn::Activation::kNone);
  sealid::Rng rng(7);
  m.stack.init(rng);
  m.x_norm = sealid::NormSpec::from_bounds();
  m.y_norm = sealid::NormSpec("apt", {{0.6, 1.0}, {1.8, 2.6}, {2.6, 3.8}});
  return m;
}

const sealid::ForwardModel& shared_apt() {
  static const sealid::ForwardModel m = apt_model();
  return m;
}

void BM_SidQuery(benchmark::State& state) {
  const sealid::InverseModel sid = sealid::build_sid(shared_apt(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sealid::infer_design(sid, {0.8, 2.16, 3.15}, false));
}
BENCHMARK(BM_SidQuery);

void BM_SidBatch(benchmark::State& state) {
  const sealid::InverseModel sid = sealid::build_sid(shared_apt(), 1);
  const sealid::Matrix t = sealid::Matrix::Constant(state.range(0), 3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(sid.generate(t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SidBatch)->Arg(95)->Arg(1000);

void BM_Backprop(benchmark::State& state) {
  const sealid::RowVector target = sealid::RowVector::Constant(3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(sealid::backprop_optimize(shared_apt().stack, target));
}
BENCHMARK(BM_Backprop)->Unit(benchmark::kMillisecond);

void BM_Sqp(benchmark::State& state) {
  const sealid::RowVector target = sealid::RowVector::Constant(3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(sealid::sqp_optimize(shared_apt().stack, target));
}
BENCHMARK(BM_Sqp)->Unit(benchmark::kMillisecond);

}  // namespace
