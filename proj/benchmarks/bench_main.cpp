#include <benchmark/benchmark.h>

#include "hybridsim/ca_engine.hpp"
#include "hybridsim/environment.hpp"
#include "hybridsim/meso_queue.hpp"
#include "hybridsim/metrics.hpp"
#include "hybridsim/multiscale.hpp"
#include "hybridsim/scenario.hpp"

using namespace hybridsim;

namespace {

const GridEnvironment& terminal() {
  static const GridEnvironment env = load_environment_file(std::string(HYBRIDSIM_DATA_DIR) + "/synthetic-terminal/WH.env");
  return env;
}

void BM_FloorField(benchmark::State& state) {
  const auto& env = terminal();
  for (auto _ : state) benchmark::DoNotOptimize(compute_floor_field(env, 0));
}
BENCHMARK(BM_FloorField);

void BM_AllFloorFields(benchmark::State& state) {
  const auto& env = terminal();
  for (auto _ : state) benchmark::DoNotOptimize(compute_all_floor_fields(env));
}
BENCHMARK(BM_AllFloorFields);

void BM_CaStep(benchmark::State& state) {
  BottleneckConfig config;
  const auto env = bottleneck_room(1.2, config);
  const auto fields = compute_all_floor_fields(env);
  const auto agents = static_cast<int>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    MicroWorld world(env, fields, {}, config.ca);
    AgentIndex id = 0;
    for (int y = 0; y < config.source_rows && static_cast<int>(id) < agents; ++y) {
      for (int x = 0; x < env.width() && static_cast<int>(id) < agents; ++x) {
        MicroAgent a;
        a.id = id++;
        a.cell = {x, y};
        a.route = {0};
        world.place(a);
      }
    }
    Rng rng(1);
    state.ResumeTiming();
    for (int k = 0; k < 20; ++k) benchmark::DoNotOptimize(world.step(k * config.ca.timestep, rng));
  }
  state.SetItemsProcessed(state.iterations() * 20 * agents);
}
BENCHMARK(BM_CaStep)->Arg(50)->Arg(350);

void BM_MesoAdvance(benchmark::State& state) {
  for (auto _ : state) {
    MesoLink link("l", "a", "b", 10.0, 100.0, 1.0, 2.0, 1000);
    for (AgentIndex a = 0; a < 500; ++a) link.try_enter(a, 0.0);
    std::size_t out = 0;
    for (int k = 0; out < 500; ++k) out += link.advance(k * 0.3, 0.3).size();
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_MesoAdvance);

void BM_ObservedPeakRun(benchmark::State& state) {
  static const Scenario s = load_scenario(std::string(HYBRIDSIM_DATA_DIR) + "/synthetic-terminal/observed-peak.manifest");
  for (auto _ : state) benchmark::DoNotOptimize(simulate(s).arrived);
}
BENCHMARK(BM_ObservedPeakRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
