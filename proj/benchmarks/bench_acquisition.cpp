#include <benchmark/benchmark.h>

#include "bilbao/acquisition.hpp"
#include "bilbao/response_map.hpp"
#include "bilbao/sobol.hpp"

using namespace bilbao;

namespace {

Dataset sample_data(int n, int d) {
  RngStream s(1, 0);
  Dataset data(sobol_points(d, n, s), Eigen::VectorXd(n));
  for (int i = 0; i < n; ++i)
    data.values[i] = std::sin(5.0 * data.points(i, 0)) * std::cos(3.0 * data.points.row(i).sum());
  return data;
}

GPModel sample_model(int n, int d) {
  KernelConfig k = KernelConfig::isotropic(KernelFamily::Matern52, d, 0.3);
  return GPModel::with_hyperparameters(sample_data(n, d), k, 1e-4);
}

void BM_ExpectedMaxGain(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  RngStream s(2, 0);
  Eigen::VectorXd a(m), b(m);
  for (int i = 0; i < m; ++i) {
    a[i] = s.normal();
    b[i] = s.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(expected_max_gain(a, b));
}
BENCHMARK(BM_ExpectedMaxGain)->Arg(10)->Arg(150)->Arg(1000);

void BM_ReviCandidate(benchmark::State& state) {
  const GPModel gp = sample_model(static_cast<int>(state.range(0)), 2);
  RngStream s(3, 0);
  const SliceDiscretization disc{sobol_points(1, 150, s)};
  const InterestSet interest = InterestSet::uniform(sobol_points(1, 10, s));
  const ReviEvaluator eval(gp, interest, disc);
  const Eigen::Vector2d cand(0.4, 0.6);
  for (auto _ : state) benchmark::DoNotOptimize(eval(cand).value);
}
BENCHMARK(BM_ReviCandidate)->Arg(20)->Arg(100);

void BM_MaximizeRevi(benchmark::State& state) {
  const GPModel gp = sample_model(60, 2);
  RngStream s(4, 0);
  const SliceDiscretization disc{sobol_points(1, 150, s)};
  const InterestSet interest = InterestSet::uniform(sobol_points(1, 10, s));
  for (auto _ : state) {
    RngStream stream(5, 0);
    benchmark::DoNotOptimize(maximize_revi(gp, interest, disc, 256, stream));
  }
}
BENCHMARK(BM_MaximizeRevi)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
  const Dataset data = sample_data(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, KernelFamily::Matern52, 7).noise());
}
BENCHMARK(BM_Fit)->Args({50, 2})->Args({100, 2})->Args({120, 4})->Unit(benchmark::kMillisecond);

void BM_BuildMap(benchmark::State& state) {
  const GPModel gp = sample_model(100, 2);
  RngStream s(6, 0);
  const Eigen::MatrixXd grid = sobol_points(1, static_cast<int>(state.range(0)), s);
  for (auto _ : state) benchmark::DoNotOptimize(build_map(gp, grid).values.sum());
}
BENCHMARK(BM_BuildMap)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
