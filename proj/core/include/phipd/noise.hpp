#pragma once

#include "phipd/image.hpp"
#include "phipd/rng.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

// Structured noise: random Fourier magnitude paired with (part of) an image's
// Fourier phase.

namespace phipd::noise {

enum class MagnitudeSource {
  gaussian_fft,  // |fft2(eps)|, eps ~ N(0, 1)
  rayleigh,      // drawn per bin, scaled to unit power
};

/// Cutoff that keeps the image phase at every frequency.
inline constexpr double kFullCutoff = std::numeric_limits<double>::infinity();

/// Rayleigh scale under the unitary transform: E[A^2] = 2 s^2 = 1.
inline constexpr double kRayleighScale = 0.70710678118654752440;

struct NoiseSpec {
  MagnitudeSource magnitude_source = MagnitudeSource::gaussian_fft;
  /// nullopt: no image phase at all (M = 0, plain Gaussian noise).
  /// kFullCutoff: phase-preserving noise.
  std::optional<double> cutoff_radius = kFullCutoff;
  double sigma = 2.0;
  /// Rescale to unit sample variance (mean kept). Ignored when cutoff is nullopt,
  /// where the output already is a raw Gaussian draw.
  bool normalize = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mask M(u, v) with cutoff radius and Gaussian roll-off, plus its parameters.
struct FrequencyMask {
  ImageGrid weights;
  double cutoff_radius = 0.0;
  double sigma = 2.0;
};

/// Training-time cutoff sampler: r = r0 + Exp(lambda).
struct RadiusSampler {
  double r0 = 4.0;
  double lambda = 0.1;

  void validate() const;
};

/// Wrapped radial frequency of bin (u, v): sqrt(min(u, H-u)^2 + min(v, W-v)^2).
double radial_distance(std::size_t u, std::size_t v, std::size_t height, std::size_t width);

/// i.i.d. standard normal image; the draw consumed by gaussian_magnitude and
/// by the shared-draw path of fss_noise.
ImageGrid gaussian_image(std::size_t height, std::size_t width, Rng& rng);

MagnitudeField gaussian_magnitude(std::size_t height, std::size_t width, Rng& rng);
MagnitudeField rayleigh_magnitude(std::size_t height, std::size_t width, Rng& rng);

FrequencyMask frequency_mask(std::size_t height, std::size_t width, double cutoff_radius,
                             double sigma);

/// Full-phase structured noise, seeded from spec.seed. The cutoff in `spec` is ignored.
ImageGrid phase_preserving_noise(const ImageGrid& img, const NoiseSpec& spec);
ImageGrid phase_preserving_noise(const ImageGrid& img, const NoiseSpec& spec, Rng& rng);

/// Builds noise from a caller-supplied magnitude and the image phase. With
/// magnitude = |fft2(img)| and normalize = false this reconstructs img.
ImageGrid structured_from_magnitude(const ImageGrid& img, const MagnitudeField& magnitude,
                                    bool normalize);

/// Frequency-selective structured noise. Phases are mixed as the literal
/// weighted sum M * phi_img + (1 - M) * phi_noise of principal values, then
/// made Hermitian. For the Gaussian source the noise phase comes from the same
/// draw as the magnitude.
ImageGrid fss_noise(const ImageGrid& img, const NoiseSpec& spec, Rng& rng);
ImageGrid fss_noise(const ImageGrid& img, const NoiseSpec& spec);

double sample_cutoff_radius(const RadiusSampler& sampler, Rng& rng);

/// Frame k uses rng.substream(k).
std::vector<ImageGrid> noise_sequence(const std::vector<ImageGrid>& frames, const NoiseSpec& spec,
                                      const Rng& rng);

}  // namespace phipd::noise
