#include <benchmark/benchmark.h>

#include <complex>
#include <random>
#include <vector>

#include "eegemo/features.hpp"
#include "eegemo/ingest.hpp"
#include "eegemo/neural.hpp"
#include "eegemo/spectral.hpp"

using namespace eegemo;

namespace {

std::vector<double> noise(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n);
  std::vector<std::complex<double>> buf(n);
  for (auto _ : state) {
    std::copy(x.begin(), x.end(), buf.begin());
    fft_inplace(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNLogN);

void BM_WelchTrial(benchmark::State& state) {
  const auto x = noise(8064);
  for (auto _ : state) benchmark::DoNotOptimize(welch_psd(x, 128.0));
}
BENCHMARK(BM_WelchTrial);

void BM_MetaVectorsTrial(benchmark::State& state) {
  SyntheticDims d;
  d.n_trials = 1;
  const TrialTensor t = generate_synthetic(default_synthetic_spec(), d).tensor;
  const PipelineConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(meta_vectors(t, config));
}
BENCHMARK(BM_MetaVectorsTrial)->Unit(benchmark::kMillisecond);

void BM_RegionStatsTrial(benchmark::State& state) {
  SyntheticDims d;
  d.n_trials = 1;
  const TrialTensor t = generate_synthetic(default_synthetic_spec(), d).tensor;
  const PipelineConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(region_stats(t, config));
}
BENCHMARK(BM_RegionStatsTrial)->Unit(benchmark::kMillisecond);

void BM_LstmStep(benchmark::State& state) {
  LstmConfig cfg;
  LstmModel model = init_model(cfg, 70, 1);
  RmspropState opt = make_rmsprop(cfg, model.params);
  const auto v = noise(70 * 32 * cfg.seq_len);
  SequenceBatch batch;
  for (std::size_t t = 0; t < cfg.seq_len; ++t) {
    batch.push_back(Eigen::Map<const Eigen::MatrixXd>(v.data() + t * 70 * 32, 70, 32));
  }
  const Eigen::MatrixXd target = Eigen::MatrixXd::Constant(2, 32, 1.0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const ForwardCache fc = forward(model, batch, Mode::Train, ++seed);
    ModelParameters g = backward(model, fc, mse_grad(fc.predictions, target));
    rmsprop_step(opt, model.params, g);
  }
}
BENCHMARK(BM_LstmStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
