#pragma once

#include "phipd/diffusion.hpp"
#include "phipd/error.hpp"
#include "phipd/image.hpp"
#include "phipd/noise.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

// Small convolutional predictor with hand-written backprop.
//
//   x ─ conv3x3(1→32) ─ +time bias ─ SiLU ─ conv3x3(32→32) ─ SiLU
//     ─ conv3x3(32→32) ─ SiLU ─ conv3x3(32→1) ─ + x ─▶ output
//
// Convolutions use zero padding and stride 1. The time bias is
// fc2(SiLU(fc1(embed(t)))) with a 16-wide sinusoidal embedding.

namespace phipd::denoiser {

inline constexpr int kChannels = 32;
inline constexpr int kEmbedDim = 16;
inline constexpr int kTimeHidden = 32;
inline constexpr int kKernel = 3;

/// One named array inside the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

/// Ordered list of parameter blocks; offsets are contiguous.
const std::vector<ParamBlock>& param_layout();
std::size_t param_count();

/// Weights and biases, flattened in param_layout() order. Gradients use the
/// same type.
struct DenoiserParams {
  std::vector<double> values;

  DenoiserParams() : values(param_count(), 0.0) {}
  std::span<double> block(std::size_t index);
  std::span<const double> block(std::size_t index) const;

  friend bool operator==(const DenoiserParams&, const DenoiserParams&) = default;
};

/// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), for every
/// block except the last convolution, which starts at zero.
DenoiserParams init_params(std::uint64_t seed);

/// Sinusoidal time features: sin/cos of 1000 t * 10000^(-i/8), i = 0..7.
std::vector<double> time_embedding(double t);

ImageGrid forward(const DenoiserParams& params, const ImageGrid& x, double t);

struct TrainingExample {
  ImageGrid x;
  double t = 0.0;
  ImageGrid target;
};

struct LossAndGrad {
  double loss = 0.0;
  DenoiserParams grad;
};

/// Mean squared error over batch and pixels and its exact gradient. Per-item
/// work may run on `threads` threads; gradients are summed in item order.
LossAndGrad loss_and_grad(const DenoiserParams& params, std::span<const TrainingExample> batch,
                          int threads = 1);
double loss(const DenoiserParams& params, std::span<const TrainingExample> batch);

enum class Objective { flow, ddpm };

enum class NoiseMode {
  structured,  // FSS noise with r = r0 + Exp(lambda) per iteration
  gaussian,    // cutoff NONE: plain Gaussian diffusion
};

struct TrainConfig {
  Objective objective = Objective::flow;
  NoiseMode noise_mode = NoiseMode::structured;
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 1e-3;
  noise::RadiusSampler radius_sampler{};
  double sigma = 2.0;
  noise::MagnitudeSource magnitude_source = noise::MagnitudeSource::gaussian_fft;
  bool normalize = true;
  int ddpm_steps = 200;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct TrainResult {
  DenoiserParams params;
  std::vector<double> loss_history;  // mean loss per epoch
};

/// Raised by train() on a non-finite loss; carries the epochs completed so far.
class TrainingAborted : public TrainingDivergence {
 public:
  TrainingAborted(const std::string& what, long iteration, std::vector<double> history)
      : TrainingDivergence(what, iteration), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Called after every epoch with the updated parameters.
using EpochCallback =
    std::function<void(int epoch, double mean_loss, const DenoiserParams& params)>;

/// Plain SGD with a fixed learning rate. Each iteration draws one cutoff
/// radius, builds noise per item, corrupts with the configured objective and
/// regresses the velocity (flow) or the noise (ddpm).
///
/// Randomness (all from config.seed):
///   substream 1, key epoch      -> shuffle order
///   substream 2, key iteration  -> cutoff radius
///   substream 3, key item count -> timestep + noise for that item
TrainResult train(const std::vector<ImageGrid>& corpus, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Training noise for one item as train() builds it.
ImageGrid training_noise(const ImageGrid& img, const TrainConfig& config, double cutoff_radius,
                         Rng& rng);

/// Adapters for the samplers.
diffusion::VelocityModel velocity_model(const DenoiserParams& params);
diffusion::NoiseModel noise_model(const DenoiserParams& params, int total_steps);

}  // namespace phipd::denoiser
