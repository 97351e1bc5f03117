#include <benchmark/benchmark.h>

#include "coopt/experiment.hpp"
#include "coopt/offpolicy.hpp"
#include "coopt/pipeline.hpp"

namespace {

using namespace coopt;

const ExperimentConfig& config() {
  static const ExperimentConfig c = bundled_config();
  return c;
}

void BM_RegressionBundle(benchmark::State& state) {
  const auto& c = config();
  const auto exec = static_cast<Execution>(state.range(0));
  const int tf = static_cast<int>(state.range(1));
  const auto log = behavior_log(c, tf);
  const auto& f = c.mas.followers[0];
  const auto basis = build_basis(output_map(f), log.F_hat[0].back(), f.n());
  for (auto _ : state) {
    auto b = build_regression_bundle(log, 0, basis, c.learning.t0, tf, exec);
    benchmark::DoNotOptimize(b.theta.data());
  }
  state.SetLabel(exec == Execution::kSerial ? "serial" : "openmp");
}
BENCHMARK(BM_RegressionBundle)
    ->ArgsProduct({{static_cast<int>(Execution::kSerial),
                    static_cast<int>(Execution::kOpenMP)},
                   {100, 400}})
    ->Unit(benchmark::kMicrosecond);

void BM_Algorithm1(benchmark::State& state) {
  auto c = config();
  c.exec = static_cast<Execution>(state.range(0));
  for (auto _ : state) {
    auto g = run_learning(c);
    benchmark::DoNotOptimize(g.agents.data());
  }
  state.SetLabel(c.exec == Execution::kSerial ? "serial" : "openmp");
}
BENCHMARK(BM_Algorithm1)
    ->Arg(static_cast<int>(Execution::kSerial))
    ->Arg(static_cast<int>(Execution::kOpenMP))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
