#include <benchmark/benchmark.h>

#include "gflow/flow.hpp"

using namespace gflow;

namespace {

const GuidedFlow& uniform_flow() {
  static const GuidedFlow flow(MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0)),
                               {3.0, ClassLabel::Positive, {}});
  return flow;
}

void BM_BatchSerial(benchmark::State& state) {
  const IntegratorConfig cfg;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_batch_serial(uniform_flow(), cfg, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const IntegratorConfig cfg;
  const auto n = static_cast<std::size_t>(state.range(0));
  BatchOptions opt;
  opt.workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(sample_batch(uniform_flow(), cfg, n, 1, opt));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Args({64, 1})->Args({64, 2})->Args({64, 4})
    ->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
