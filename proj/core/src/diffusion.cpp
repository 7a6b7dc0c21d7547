#include "phipd/diffusion.hpp"

#include "phipd/error.hpp"

#include <cmath>
#include <string>

namespace phipd::diffusion {

namespace {

void require_model_output(const ImageGrid& out, const ImageGrid& x, const char* context) {
  if (!out.same_shape(x)) {
    throw InvalidArgument(std::string(context) + ": model output shape does not match its input");
  }
}

}  // namespace

ImageGrid flow_interpolate(const ImageGrid& img, const ImageGrid& noise, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InvalidArgument("flow_interpolate: t must lie in [0, 1], got " + std::to_string(t));
  }
  require_same_shape(img, noise, "flow_interpolate");
  if (t == 0.0) return img;
  if (t == 1.0) return noise;
  ImageGrid out(img.height(), img.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t * noise[i] + (1.0 - t) * img[i];
  return out;
}

ImageGrid flow_velocity_target(const ImageGrid& img, const ImageGrid& noise) {
  require_same_shape(img, noise, "flow_velocity_target");
  return noise - img;
}

DiffusionSchedule ddpm_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw InvalidArgument("ddpm schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw InvalidArgument("ddpm schedule needs 0 < beta_start <= beta_end < 1");
  }
  DiffusionSchedule sched;
  sched.beta.resize(steps);
  sched.alpha_bar.resize(steps);
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    sched.beta[t] = beta_start + (beta_end - beta_start) * frac;
  }
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    prod *= 1.0 - sched.beta[t];
    sched.alpha_bar[t] = prod;
  }
  return sched;
}

ImageGrid ddpm_forward(const ImageGrid& x0, const ImageGrid& noise, int t,
                       const DiffusionSchedule& sched) {
  if (t < 0 || t >= sched.steps()) {
    throw InvalidArgument("ddpm_forward: step " + std::to_string(t) + " outside [0, " +
                          std::to_string(sched.steps()) + ")");
  }
  require_same_shape(x0, noise, "ddpm_forward");
  const double signal = std::sqrt(sched.alpha_bar[t]);
  const double spread = std::sqrt(1.0 - sched.alpha_bar[t]);
  ImageGrid out(x0.height(), x0.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = signal * x0[i] + spread * noise[i];
  return out;
}

double ddpm_time(int step, int total_steps) {
  return static_cast<double>(step + 1) / static_cast<double>(total_steps);
}

std::vector<FlowState> flow_trajectory(const VelocityModel& model, const ImageGrid& noise,
                                       int steps) {
  if (steps < 1) throw InvalidArgument("flow_sample: steps must be >= 1");
  const double dt = 1.0 / steps;
  std::vector<FlowState> states;
  states.reserve(steps + 1);
  states.push_back({noise, 1.0});
  ImageGrid x = noise;
  for (int k = 0; k < steps; ++k) {
    const double t = 1.0 - k * dt;
    const ImageGrid u = model(x, t);
    require_model_output(u, x, "flow_sample");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= dt * u[i];
    states.push_back({x, k + 1 == steps ? 0.0 : 1.0 - (k + 1) * dt});
  }
  return states;
}

ImageGrid flow_sample(const VelocityModel& model, const ImageGrid& noise, int steps) {
  if (steps < 1) throw InvalidArgument("flow_sample: steps must be >= 1");
  const double dt = 1.0 / steps;
  ImageGrid x = noise;
  for (int k = 0; k < steps; ++k) {
    const ImageGrid u = model(x, 1.0 - k * dt);
    require_model_output(u, x, "flow_sample");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= dt * u[i];
  }
  return x;
}

ImageGrid ddpm_sample(const NoiseModel& model, const ImageGrid& noise,
                      const DiffusionSchedule& sched, const Rng& rng,
                      const DdpmSamplerOptions& options) {
  validate_image(noise);
  noise::NoiseSpec z_spec;
  z_spec.magnitude_source = options.magnitude_source;
  z_spec.cutoff_radius = noise::kFullCutoff;
  z_spec.normalize = true;

  ImageGrid x = noise;
  for (int t = sched.steps() - 1; t >= 0; --t) {
    const double beta = sched.beta[t];
    const double eps_coef = beta / std::sqrt(1.0 - sched.alpha_bar[t]);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    const ImageGrid eps = model(x, t);
    require_model_output(eps, x, "ddpm_sample");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - eps_coef * eps[i]) * inv_sqrt_alpha;
    if (t == 0) break;

    Rng step_rng = rng.substream(static_cast<std::uint64_t>(t));
    const ImageGrid z =
        options.reverse_noise == ReverseNoise::structured
            ? noise::phase_preserving_noise(noise, z_spec, step_rng)
            : noise::gaussian_image(x.height(), x.width(), step_rng);
    const double sigma = std::sqrt(beta);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += sigma * z[i];
  }
  return x;
}

}  // namespace phipd::diffusion
