// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <map>

#include "whatif/harness.hpp"
#include "whatif/reduction.hpp"
#include "whatif/scenario.hpp"

using namespace whatif;

namespace {

const MitigationTask& instance(unsigned hosts) {
  static std::map<unsigned, MitigationTask> cache;
  auto it = cache.find(hosts);
  if (it == cache.end()) {
    GenParams p;
    p.hosts = hosts;
    p.seed = 7;
    it = cache.emplace(hosts, generate_task(p).task).first;
  }
  return it->second;
}

void BM_RelationsParallel(benchmark::State& state) {
  const auto& t = instance(static_cast<unsigned>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_relations(t.fixes));
  state.counters["fixes"] = static_cast<double>(t.fixes.size());
}

void BM_RelationsSerial(benchmark::State& state) {
  const auto& t = instance(static_cast<unsigned>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_relations_serial(t.fixes));
  state.counters["fixes"] = static_cast<double>(t.fixes.size());
}

void BM_Sweep(benchmark::State& state) {
  SweepConfig cfg;
  cfg.instances = generated_instances(GenParams{}, {40}, {1, 2, 3, 8, 10, 12});
  cfg.gamma_m = {1.0, 2.5};
  cfg.gamma_a = {2.5};
  cfg.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(cfg));
}

}  // namespace

BENCHMARK(BM_RelationsParallel)->Arg(40)->Arg(120)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RelationsSerial)->Arg(40)->Arg(120)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Sweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
