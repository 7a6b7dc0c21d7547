#include "phipd/noise.hpp"

#include "phipd/error.hpp"
#include "phipd/spectral.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace phipd::noise {

namespace {

void require_dims(std::size_t height, std::size_t width) {
  if (height < 2 || width < 2) {
    throw InvalidArgument("noise field must be at least 2x2, got " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
}

PhaseField image_phase(const ImageGrid& img) {
  validate_image(img);
  bool all_zero = true;
  for (double v : img.values()) all_zero = all_zero && v == 0.0;
  if (all_zero) throw DegeneratePhase("structured noise needs a nonzero image: phase is undefined");
  return spectral::phase(spectral::fft2(img));
}

// Projects onto the Hermitian set, inverts, and optionally rescales to unit
// sample variance. The mean is left alone.
ImageGrid synthesize(const MagnitudeField& magnitude, const PhaseField& phase, bool normalize) {
  auto [mag, ph] = spectral::hermitian_project(magnitude, phase);
  ImageGrid out = spectral::ifft2(spectral::compose(mag, ph));
  if (normalize) {
    const double var = variance(out);
    if (var > 0.0) {
      const double scale = 1.0 / std::sqrt(var);
      for (double& v : out.storage()) v *= scale;
    }
  }
  return out;
}

struct NoiseDraw {
  MagnitudeField magnitude;
  PhaseField phase;  // empty unless requested
};

// Gaussian source: magnitude and phase come from one draw eps. Rayleigh
// source: magnitude first, then a separate Gaussian draw for the phase.
NoiseDraw draw_noise(std::size_t height, std::size_t width, MagnitudeSource source,
                     bool want_phase, Rng& rng) {
  NoiseDraw draw;
  if (source == MagnitudeSource::gaussian_fft) {
    auto [mag, ph] = spectral::decompose(spectral::fft2(gaussian_image(height, width, rng)));
    draw.magnitude = std::move(mag);
    if (want_phase) draw.phase = std::move(ph);
  } else {
    draw.magnitude = rayleigh_magnitude(height, width, rng);
    if (want_phase) draw.phase = spectral::phase(spectral::fft2(gaussian_image(height, width, rng)));
  }
  return draw;
}

}  // namespace

void NoiseSpec::validate() const {
  std::vector<std::string> bad;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) bad.emplace_back("sigma");
  if (cutoff_radius && !(*cutoff_radius >= 0.0)) bad.emplace_back("cutoff_radius");
  if (!bad.empty()) {
    std::string msg = "invalid noise spec:";
    for (const auto& b : bad) msg += " " + b;
    throw InvalidArgument(msg);
  }
}

void RadiusSampler::validate() const {
  if (!(r0 >= 0.0) || !std::isfinite(r0)) {
    throw InvalidArgument("radius sampler r0 must be finite and >= 0");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("radius sampler lambda must be finite and > 0");
  }
}

double radial_distance(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  const double du = static_cast<double>(std::min(u, height - u));
  const double dv = static_cast<double>(std::min(v, width - v));
  return std::sqrt(du * du + dv * dv);
}

ImageGrid gaussian_image(std::size_t height, std::size_t width, Rng& rng) {
  require_dims(height, width);
  ImageGrid eps(height, width);
  for (double& v : eps.storage()) v = rng.normal();
  return eps;
}

MagnitudeField gaussian_magnitude(std::size_t height, std::size_t width, Rng& rng) {
  return spectral::magnitude(spectral::fft2(gaussian_image(height, width, rng)));
}

MagnitudeField rayleigh_magnitude(std::size_t height, std::size_t width, Rng& rng) {
  require_dims(height, width);
  // One draw per canonical bin, copied onto its mirror: the result is already
  // the Hermitian projection of an independent per-bin draw.
  MagnitudeField mag(height, width);
  for (std::size_t u = 0; u < height; ++u) {
    for (std::size_t v = 0; v < width; ++v) {
      const std::size_t i = u * width + v;
      const std::size_t j = spectral::mirror_index(u, v, height, width);
      if (i == j) {
        mag[i] = std::abs(rng.normal());
      } else if (i < j) {
        mag[i] = kRayleighScale * std::sqrt(-2.0 * std::log(rng.uniform()));
        mag[j] = mag[i];
      }
    }
  }
  return mag;
}

FrequencyMask frequency_mask(std::size_t height, std::size_t width, double cutoff_radius,
                             double sigma) {
  require_dims(height, width);
  if (!(cutoff_radius >= 0.0)) throw InvalidArgument("mask cutoff radius must be >= 0");
  if (!(sigma > 0.0)) throw InvalidArgument("mask sigma must be > 0");
  FrequencyMask mask{ImageGrid(height, width), cutoff_radius, sigma};
  for (std::size_t u = 0; u < height; ++u) {
    for (std::size_t v = 0; v < width; ++v) {
      const double d = radial_distance(u, v, height, width);
      mask.weights(u, v) =
          d <= cutoff_radius ? 1.0
                             : std::exp(-(d - cutoff_radius) * (d - cutoff_radius) /
                                        (2.0 * sigma * sigma));
    }
  }
  return mask;
}

ImageGrid phase_preserving_noise(const ImageGrid& img, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  const PhaseField image_ph = image_phase(img);
  const NoiseDraw draw =
      draw_noise(img.height(), img.width(), spec.magnitude_source, /*want_phase=*/false, rng);
  return synthesize(draw.magnitude, image_ph, spec.normalize);
}

ImageGrid phase_preserving_noise(const ImageGrid& img, const NoiseSpec& spec) {
  Rng rng(spec.seed);
  return phase_preserving_noise(img, spec, rng);
}

ImageGrid structured_from_magnitude(const ImageGrid& img, const MagnitudeField& magnitude,
                                    bool normalize) {
  const PhaseField image_ph = image_phase(img);
  if (!magnitude.same_shape(img)) {
    throw InvalidArgument("structured_from_magnitude: magnitude shape mismatch");
  }
  return synthesize(magnitude, image_ph, normalize);
}

ImageGrid fss_noise(const ImageGrid& img, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  validate_image(img);
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  if (!spec.cutoff_radius) {
    // M = 0: only the noise phase remains. For the Gaussian source this is
    // fft2(eps) recomposed, i.e. eps itself.
    const NoiseDraw draw = draw_noise(h, w, spec.magnitude_source, /*want_phase=*/true, rng);
    return synthesize(draw.magnitude, draw.phase, /*normalize=*/false);
  }
  const PhaseField image_ph = image_phase(img);
  const NoiseDraw draw = draw_noise(h, w, spec.magnitude_source, /*want_phase=*/true, rng);
  const FrequencyMask mask = frequency_mask(h, w, *spec.cutoff_radius, spec.sigma);
  PhaseField mixed(h, w);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    const double m = mask.weights[i];
    mixed[i] = image_ph[i] * m + draw.phase[i] * (1.0 - m);
  }
  return synthesize(draw.magnitude, mixed, spec.normalize);
}

ImageGrid fss_noise(const ImageGrid& img, const NoiseSpec& spec) {
  Rng rng(spec.seed);
  return fss_noise(img, spec, rng);
}

double sample_cutoff_radius(const RadiusSampler& sampler, Rng& rng) {
  sampler.validate();
  return sampler.r0 + rng.exponential(sampler.lambda);
}

std::vector<ImageGrid> noise_sequence(const std::vector<ImageGrid>& frames, const NoiseSpec& spec,
                                      const Rng& rng) {
  if (frames.empty()) throw InvalidArgument("noise_sequence: no frames");
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!frames[k].same_shape(frames[0])) {
      throw InvalidArgument("noise_sequence: frame " + std::to_string(k) +
                            " differs in size from frame 0");
    }
  }
  std::vector<ImageGrid> out;
  out.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    Rng frame_rng = rng.substream(k);
    out.push_back(fss_noise(frames[k], spec, frame_rng));
  }
  return out;
}

}  // namespace phipd::noise
