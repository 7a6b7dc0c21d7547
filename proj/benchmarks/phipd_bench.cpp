#include "phipd/corpus.hpp"
#include "phipd/denoiser.hpp"
#include "phipd/diffusion.hpp"
#include "phipd/noise.hpp"
#include "phipd/spectral.hpp"

#include <benchmark/benchmark.h>

using namespace phipd;

namespace {

ImageGrid bench_image(int size) {
  corpus::SynthCorpusConfig cfg;
  cfg.size = size;
  return corpus::generate_pair(cfg, 0).shaded;
}

void BM_Fft2(benchmark::State& state) {
  const ImageGrid img = bench_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::fft2(img));
}
BENCHMARK(BM_Fft2)->Arg(32)->Arg(64)->Arg(128);

void BM_FftRoundTrip(benchmark::State& state) {
  const ImageGrid img = bench_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::ifft2(spectral::fft2(img)));
}
BENCHMARK(BM_FftRoundTrip)->Arg(64);

void BM_FssNoise(benchmark::State& state) {
  const ImageGrid img = bench_image(static_cast<int>(state.range(0)));
  noise::NoiseSpec spec;
  spec.cutoff_radius = 10.0;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(noise::fss_noise(img, spec, rng));
}
BENCHMARK(BM_FssNoise)->Arg(32)->Arg(64);

void BM_Forward(benchmark::State& state) {
  const ImageGrid img = bench_image(static_cast<int>(state.range(0)));
  const auto params = denoiser::init_params(0);
  for (auto _ : state) benchmark::DoNotOptimize(denoiser::forward(params, img, 0.5));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LossAndGrad(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const ImageGrid img = bench_image(size);
  Rng rng(2);
  const ImageGrid eps = noise::gaussian_image(img.height(), img.width(), rng);
  std::vector<denoiser::TrainingExample> batch(
      8, {diffusion::flow_interpolate(img, eps, 0.5), 0.5, diffusion::flow_velocity_target(img, eps)});
  const auto params = denoiser::init_params(0);
  for (auto _ : state) benchmark::DoNotOptimize(denoiser::loss_and_grad(params, batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_LossAndGrad)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FlowSample(benchmark::State& state) {
  const ImageGrid img = bench_image(32);
  noise::NoiseSpec spec;
  const ImageGrid eps = noise::fss_noise(img, spec);
  const auto model = denoiser::velocity_model(denoiser::init_params(0));
  for (auto _ : state) benchmark::DoNotOptimize(diffusion::flow_sample(model, eps, 50));
}
BENCHMARK(BM_FlowSample)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
