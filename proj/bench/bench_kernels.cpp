#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "driftnn/bspline.hpp"
#include "driftnn/metrics.hpp"
#include "driftnn/network.hpp"
#include "driftnn/sde.hpp"

using namespace driftnn;

namespace {

const GridSpec kGrid(1.0, 100);

const TrajectorySet& paths(std::size_t n, std::size_t d) {
  static std::map<std::pair<std::size_t, std::size_t>, TrajectorySet> cache;
  auto it = cache.find({n, d});
  if (it == cache.end()) {
    it = cache.emplace(std::pair{n, d}, simulate(DriftSpec::paper_example(d), DiffusionSpec::identity(d), kGrid, n,
                                                 InitialLaw::standard_normal(), 1))
             .first;
  }
  return it->second;
}

SparseNetwork bench_net(std::size_t d) {
  const auto arch = Architecture::from_hidden(d, {16, 32, 16});
  SparseNetwork net(arch, sparsity_budget(arch, 0.75));
  initialize_uniform(net, 3);
  return net;
}

void BM_simulate_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_serial(DriftSpec::paper_example(2), DiffusionSpec::identity(2), kGrid, n,
                                             InitialLaw::standard_normal(), 1));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * kGrid.steps));
}

void BM_simulate_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(DriftSpec::paper_example(2), DiffusionSpec::identity(2), kGrid, n,
                                      InitialLaw::standard_normal(), 1));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * kGrid.steps));
}

void BM_backward_serial(benchmark::State& state) {
  const auto samples = make_samples(paths(static_cast<std::size_t>(state.range(0)), 1), 1);
  const auto net = bench_net(1);
  std::vector<std::size_t> batch(samples.size());
  std::iota(batch.begin(), batch.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(backward_serial(net, samples, batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}

void BM_backward_parallel(benchmark::State& state) {
  const auto samples = make_samples(paths(static_cast<std::size_t>(state.range(0)), 1), 1);
  const auto net = bench_net(1);
  std::vector<std::size_t> batch(samples.size());
  std::iota(batch.begin(), batch.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(backward(net, samples, batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}

void BM_gram_serial(benchmark::State& state) {
  const auto samples = make_samples(paths(static_cast<std::size_t>(state.range(0)), 2), 1);
  const SplineBasisSpec spec(4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_gram_serial(samples, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}

void BM_gram_parallel(benchmark::State& state) {
  const auto samples = make_samples(paths(static_cast<std::size_t>(state.range(0)), 2), 1);
  const SplineBasisSpec spec(4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_gram(samples, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}

const ScalarField kTarget = [](std::span<const double> x) { return x[0] * (1.0 - x[0]); };

void BM_risk_serial(benchmark::State& state) {
  const auto& test = paths(static_cast<std::size_t>(state.range(0)), 1);
  const auto net = bench_net(1);
  const ScalarField est = [&net](std::span<const double> x) { return net.forward(x); };
  for (auto _ : state) benchmark::DoNotOptimize(empirical_risk_serial(est, kTarget, test));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(test.paths * kGrid.steps));
}

void BM_risk_parallel(benchmark::State& state) {
  const auto& test = paths(static_cast<std::size_t>(state.range(0)), 1);
  const auto net = bench_net(1);
  const ScalarField est = [&net](std::span<const double> x) { return net.forward(x); };
  for (auto _ : state) benchmark::DoNotOptimize(empirical_risk(est, kTarget, test));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(test.paths * kGrid.steps));
}

}  // namespace

BENCHMARK(BM_simulate_serial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backward_serial)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backward_parallel)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gram_serial)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gram_parallel)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_risk_serial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_risk_parallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
