#include <benchmark/benchmark.h>

#include "usecon/description.hpp"
#include "usecon/explorer.hpp"
#include "usecon/properties.hpp"

namespace {

using namespace usecon;

SystemConfig config_for(ModelKind model, int uses, const char* policy) {
  SystemSpec spec = uniform_system(model, 1, 1, uses);
  apply_builtin_policy(spec, policy);
  return build_system(std::move(spec));
}

void report(benchmark::State& state, std::uint64_t distinct, std::uint64_t found) {
  state.counters["distinct"] = static_cast<double>(distinct);
  state.counters["states/s"] =
      benchmark::Counter(static_cast<double>(found) * state.iterations(), benchmark::Counter::kIsRate);
}

// Args: uses, model (0 pre, 1 ongoing)
void BM_Reference(benchmark::State& state) {
  auto cfg = config_for(state.range(1) ? ModelKind::ongoing : ModelKind::pre, static_cast<int>(state.range(0)),
                        "activated-lt-3");
  ReferenceResult r;
  for (auto _ : state) {
    r = explore_reference(cfg);
    benchmark::DoNotOptimize(r.distinct_states);
  }
  report(state, r.distinct_states, r.states_found);
}

// Args: uses, model, workers
void BM_Parallel(benchmark::State& state) {
  auto cfg = config_for(state.range(1) ? ModelKind::ongoing : ModelKind::pre, static_cast<int>(state.range(0)),
                        "activated-lt-3");
  ExplorationResult r;
  for (auto _ : state) {
    r = explore_graph(cfg, ExploreOptions{static_cast<int>(state.range(2))}).result;
    benchmark::DoNotOptimize(r.distinct_states);
  }
  report(state, r.distinct_states, r.states_found);
}

// Args: uses, workers. Exploration plus the full ongoing property pack.
void BM_FullCheck(benchmark::State& state) {
  auto cfg = config_for(ModelKind::ongoing, static_cast<int>(state.range(0)), "true");
  auto pack = property_pack(cfg);
  Checks checks{true, pack.invariants, pack.monitors, pack.liveness};
  ExplorationResult r;
  for (auto _ : state) {
    r = explore(cfg, checks, ExploreOptions{static_cast<int>(state.range(1))}).result;
    benchmark::DoNotOptimize(r.violations.size());
  }
  report(state, r.distinct_states, r.states_found);
}

}  // namespace

BENCHMARK(BM_Reference)->ArgsProduct({{6, 7}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->ArgsProduct({{6, 7}, {0, 1}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FullCheck)->ArgsProduct({{6}, {1, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
