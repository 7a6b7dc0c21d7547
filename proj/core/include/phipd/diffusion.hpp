#pragma once

#include "phipd/image.hpp"
#include "phipd/noise.hpp"
#include "phipd/rng.hpp"

#include <functional>
#include <vector>

// Forward corruption and sampling loops for rectified flow and DDPM.
//
// Flow time runs from t = 0 (data) to t = 1 (noise). DDPM steps are indexed
// 0..T-1 with alpha_bar[t] = prod_{s<=t} (1 - beta[s]) and alpha_bar[-1] = 1.

namespace phipd::diffusion {

struct DiffusionSchedule {
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  int steps() const noexcept { return static_cast<int>(beta.size()); }
};

struct FlowState {
  ImageGrid x;
  double t = 1.0;
};

/// Velocity model u(x_t, t).
using VelocityModel = std::function<ImageGrid(const ImageGrid& x, double t)>;
/// Noise model eps(x_t, step) over integer DDPM steps.
using NoiseModel = std::function<ImageGrid(const ImageGrid& x, int step)>;

ImageGrid flow_interpolate(const ImageGrid& img, const ImageGrid& noise, double t);
ImageGrid flow_velocity_target(const ImageGrid& img, const ImageGrid& noise);

DiffusionSchedule ddpm_linear_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

/// sqrt(alpha_bar[t]) x0 + sqrt(1 - alpha_bar[t]) noise.
ImageGrid ddpm_forward(const ImageGrid& x0, const ImageGrid& noise, int t,
                       const DiffusionSchedule& sched);

/// Continuous time fed to a network for DDPM step t: (t + 1) / T.
double ddpm_time(int step, int total_steps);

/// Explicit Euler from t = 1 down to t = 0 in `steps` uniform steps.
ImageGrid flow_sample(const VelocityModel& model, const ImageGrid& noise, int steps);
/// Same loop, reporting every intermediate state (including the start).
std::vector<FlowState> flow_trajectory(const VelocityModel& model, const ImageGrid& noise,
                                       int steps);

enum class ReverseNoise {
  structured,  // z_t shares the phase of the starting noise
  gaussian,    // plain N(0, 1) draws
};

struct DdpmSamplerOptions {
  ReverseNoise reverse_noise = ReverseNoise::structured;
  noise::MagnitudeSource magnitude_source = noise::MagnitudeSource::gaussian_fft;
};

/// Ancestral sampling with sigma_t = sqrt(beta_t); step t draws from
/// rng.substream(t) and the final step adds nothing.
ImageGrid ddpm_sample(const NoiseModel& model, const ImageGrid& noise,
                      const DiffusionSchedule& sched, const Rng& rng,
                      const DdpmSamplerOptions& options = {});

}  // namespace phipd::diffusion
