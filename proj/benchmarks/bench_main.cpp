#include <ismoe/ismoe.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace ismoe;

TrainTest data(Index n) { return gen_stationary(n, 100, 15.0, 1.0, 0.1, 7); }

void BM_KernelMatrix(benchmark::State &state) {
  const Matrix X = data(state.range(0)).train.inputs;
  const KernelHyperparams h;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_matrix(X, X, h));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KernelMatrix)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNSquared);

void BM_GpFit(benchmark::State &state) {
  const TrainTest d = data(state.range(0));
  KernelHyperparams h;
  h.log_inv_lengthscale(0) = std::log(15.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp_fit(d.train.inputs, d.train.outputs, h).log_marginal());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNCubed);

void BM_LogMarginalGradient(benchmark::State &state) {
  const TrainTest d = data(state.range(0));
  const KernelHyperparams h;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_marginal_likelihood(d.train.inputs, d.train.outputs, h));
  }
}
BENCHMARK(BM_LogMarginalGradient)->Arg(256)->Arg(1024);

void BM_SamplePartition(benchmark::State &state) {
  const TrainTest d = gen_gmm_gp(state.range(0), 10, 2, 4, 0.5, 0.1, 3);
  MixturePrior prior;
  prior.n_clusters = static_cast<int>(state.range(1));
  prior.niw = NIWPrior::from_data(d.train.inputs);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_partition(d.train.inputs, prior, 2, ++seed));
  }
}
BENCHMARK(BM_SamplePartition)->Args({1000, 10})->Args({5000, 10})->Args({1000, 50});

void BM_DrawSample(benchmark::State &state) {
  const TrainTest d = data(state.range(0));
  ISMOEConfig config;
  config.n_experts = static_cast<int>(state.range(1));
  config.optim.n_restarts = 0;
  config.optim.max_iterations = 50;
  int j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(draw_sample(d.train, config, j++).log_weight_unnorm);
  }
}
BENCHMARK(BM_DrawSample)->Args({1000, 1})->Args({1000, 10})->Unit(benchmark::kMillisecond);

void BM_Run(benchmark::State &state) {
  const TrainTest d = data(1000);
  ISMOEConfig config;
  config.n_samples = static_cast<int>(state.range(0));
  config.optim.n_restarts = 0;
  config.optim.max_iterations = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(d.train, config, d.test.inputs).diagnostics.ess);
  }
}
BENCHMARK(BM_Run)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();

} // namespace

BENCHMARK_MAIN();
