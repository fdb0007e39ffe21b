#include <benchmark/benchmark.h>

#include "fsde/coupling.hpp"
#include "fsde/estimate.hpp"
#include "fsde/functional.hpp"
#include "fsde/matops.hpp"
#include "fsde/model.hpp"
#include "fsde/rng.hpp"
#include "fsde/simulate.hpp"

namespace {

using namespace fsde;

ModelWithSuite example() { return make_example_4_1(0.1, SampledFunction::constant(1.0, 0.5), 0.5); }

Segment constant2(double a, double b, int n_hist) {
  DenseVector v(2);
  v << a, b;
  return Segment::constant(v, n_hist, 0.5);
}

void BM_MatExp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  DenseMatrix a = DenseMatrix::Random(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(mat_exp(a, 0.7));
}
BENCHMARK(BM_MatExp)->Arg(2)->Arg(4)->Arg(8);

void BM_Increments(benchmark::State& state) {
  DenseMatrix out(1, state.range(0));
  std::uint64_t path = 0;
  for (auto _ : state) {
    fill_increments(1, path++, 0.01, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Increments)->Arg(150)->Arg(1500);

void BM_SimulatePath(benchmark::State& state) {
  const ModelWithSuite ex = example();
  const SimGrid g = SimGrid::make(1.5, 0.5, 1.0 / static_cast<double>(state.range(0)));
  const Segment xi = constant2(1.0, 1.0, g.n_hist);
  const BrownianIncrements noise = generate_increments(1, 0, g.n_steps, 1, g.dt);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_path(*ex.model, xi, g, noise));
}
BENCHMARK(BM_SimulatePath)->Arg(100)->Arg(1000);

void BM_BuildPlan(benchmark::State& state) {
  const ModelWithSuite ex = example();
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const Segment h = constant2(1.0, 1.0, g.n_hist);
  for (auto _ : state) benchmark::DoNotOptimize(build_plan(*ex.model, h, g));
}
BENCHMARK(BM_BuildPlan);

void BM_Bismut(benchmark::State& state) {
  const ModelWithSuite ex = example();
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const Segment xi = constant2(1.0, 1.0, g.n_hist);
  const Segment h = constant2(0.2, 0.2, g.n_hist);
  const TerminalFunctional f = make_functional("tanh_y", nlohmann::json::object(), 1, 1);
  const MonteCarloOptions opts{static_cast<std::size_t>(state.range(0)), 1,
                               static_cast<unsigned>(state.range(1))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_gradient_bismut(*ex.model, xi, h, f, g, opts));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bismut)->Args({10000, 1})->Args({10000, 0})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
