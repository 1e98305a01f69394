// Vector-env throughput: OpenMP step vs the serial reference, and the
// implicit scheme vs the explicit baseline.

#include <benchmark/benchmark.h>

#include "softrod/vector_env.hpp"

namespace {

using namespace softrod;

TaskSpec spec(Task task, Scheme scheme) {
  TaskSpec s;
  s.task = task;
  s.scheme = scheme;
  return s;
}

void run(benchmark::State& state, Task task, Scheme scheme, bool serial) {
  const auto n = static_cast<std::size_t>(state.range(0));
  VectorEnv venv(spec(task, scheme), SimConfig{}, n, 0);
  venv.reset();
  const std::vector<double> actions(n * venv.action_dim(), 0.05);
  std::uint64_t seed = n;
  for (auto _ : state) {
    auto r = serial ? venv.step_serial(actions) : venv.step(actions);
    benchmark::DoNotOptimize(r);
    state.PauseTiming();
    for (std::size_t i = 0; i < n; ++i) {
      if (venv.env(i).done()) venv.reset_env(i, seed++);
    }
    state.ResumeTiming();
  }
  state.counters["env_steps/s"] =
      benchmark::Counter(static_cast<double>(n * state.iterations()), benchmark::Counter::kIsRate);
  state.counters["sim_s/s"] = benchmark::Counter(
      static_cast<double>(n * state.iterations()) * venv.env(0).control_period() *
          venv.env(0).sim_dt(),
      benchmark::Counter::kIsRate);
}

void BM_ImplicitParallel(benchmark::State& s) {
  run(s, Task::follow_target, Scheme::implicit, false);
}
void BM_ImplicitSerial(benchmark::State& s) { run(s, Task::follow_target, Scheme::implicit, true); }
void BM_ExplicitParallel(benchmark::State& s) {
  run(s, Task::follow_target, Scheme::explicit_euler, false);
}
void BM_ContactImplicitParallel(benchmark::State& s) {
  run(s, Task::obstacles3d_random, Scheme::implicit, false);
}
void BM_ContactImplicitSerial(benchmark::State& s) {
  run(s, Task::obstacles3d_random, Scheme::implicit, true);
}
void BM_ContactExplicitParallel(benchmark::State& s) {
  run(s, Task::obstacles3d_random, Scheme::explicit_euler, false);
}

}  // namespace

BENCHMARK(BM_ImplicitParallel)->Arg(1)->Arg(8)->Arg(64)->UseRealTime();
BENCHMARK(BM_ImplicitSerial)->Arg(1)->Arg(8)->Arg(64)->UseRealTime();
BENCHMARK(BM_ExplicitParallel)->Arg(8)->UseRealTime();
BENCHMARK(BM_ContactImplicitParallel)->Arg(8)->UseRealTime();
BENCHMARK(BM_ContactImplicitSerial)->Arg(8)->UseRealTime();
BENCHMARK(BM_ContactExplicitParallel)->Arg(8)->UseRealTime();

BENCHMARK_MAIN();
