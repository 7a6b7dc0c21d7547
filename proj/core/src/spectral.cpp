#include "phipd/spectral.hpp"

#include "phipd/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

namespace phipd::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (H, W, direction) under a lock and
// never destroyed before exit.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t height, std::size_t width, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(height, width, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> in(height * width), out(height * width);
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width),
                                      reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

ComplexField transform(const ComplexField& in, int sign) {
  ComplexField out(in.height(), in.width());
  fftw_plan plan = plan_cache().get(in.height(), in.width(), sign);
  // fftw_execute_dft takes a non-const input even for out-of-place plans.
  auto* src = const_cast<std::complex<double>*>(in.storage().data());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src),
                   reinterpret_cast<fftw_complex*>(out.storage().data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
  for (auto& c : out.storage()) c *= scale;
  return out;
}

void require_finite(const ComplexField& field, const char* context) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!std::isfinite(field[i].real()) || !std::isfinite(field[i].imag())) {
      throw DataError(std::string(context) + ": non-finite value at (" +
                      std::to_string(i / field.width()) + ", " +
                      std::to_string(i % field.width()) + ")");
    }
  }
}

}  // namespace

ComplexField fft2(const ImageGrid& img) {
  validate_image(img);
  ComplexField in(img.height(), img.width());
  for (std::size_t i = 0; i < img.size(); ++i) in[i] = {img[i], 0.0};
  return transform(in, FFTW_FORWARD);
}

ComplexField ifft2_complex(const ComplexField& field) {
  require_finite(field, "ifft2");
  return transform(field, FFTW_BACKWARD);
}

ImageGrid ifft2(const ComplexField& field) {
  const ComplexField spatial = ifft2_complex(field);
  ImageGrid out(field.height(), field.width());
  double max_real = 0.0;
  double max_imag = 0.0;
  for (std::size_t i = 0; i < spatial.size(); ++i) {
    out[i] = spatial[i].real();
    max_real = std::max(max_real, std::abs(spatial[i].real()));
    max_imag = std::max(max_imag, std::abs(spatial[i].imag()));
  }
  if (max_imag > kSymmetryTolerance * max_real) {
    throw SymmetryViolation("ifft2: imaginary residue " + std::to_string(max_imag) +
                            " exceeds tolerance for real part max " + std::to_string(max_real));
  }
  return out;
}

double wrap_phase(double angle) {
  if (angle > -kPi && angle <= kPi) return angle;
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

double circular_distance(double a, double b) { return std::abs(wrap_phase(a - b)); }

MagnitudeField magnitude(const ComplexField& field) {
  require_finite(field, "magnitude");
  MagnitudeField mag(field.height(), field.width());
  for (std::size_t i = 0; i < field.size(); ++i) mag[i] = std::abs(field[i]);
  return mag;
}

PhaseField phase(const ComplexField& field) {
  require_finite(field, "phase");
  PhaseField ph(field.height(), field.width());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto& c = field[i];
    if (c.real() == 0.0 && c.imag() == 0.0) {
      ph[i] = 0.0;
      continue;
    }
    const double a = std::atan2(c.imag(), c.real());
    ph[i] = a == -kPi ? kPi : a;
  }
  return ph;
}

std::pair<MagnitudeField, PhaseField> decompose(const ComplexField& field) {
  return {magnitude(field), phase(field)};
}

ComplexField compose(const MagnitudeField& mag, const PhaseField& phase) {
  if (!mag.same_shape(phase)) throw InvalidArgument("compose: magnitude/phase shape mismatch");
  ComplexField out(mag.height(), mag.width());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (!(mag[i] >= 0.0)) {
      throw InvalidArgument("compose: negative magnitude at (" + std::to_string(i / mag.width()) +
                            ", " + std::to_string(i % mag.width()) + ")");
    }
    out[i] = {mag[i] * std::cos(phase[i]), mag[i] * std::sin(phase[i])};
  }
  return out;
}

std::size_t mirror_index(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  return ((height - u) % height) * width + (width - v) % width;
}

bool is_self_conjugate(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  return mirror_index(u, v, height, width) == u * width + v;
}

bool is_canonical(std::size_t u, std::size_t v, std::size_t height, std::size_t width) {
  return u * width + v <= mirror_index(u, v, height, width);
}

std::pair<MagnitudeField, PhaseField> hermitian_project(MagnitudeField mag, PhaseField phase) {
  if (!mag.same_shape(phase)) {
    throw InvalidArgument("hermitian_project: magnitude/phase shape mismatch");
  }
  const std::size_t h = mag.height();
  const std::size_t w = mag.width();
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      const std::size_t i = u * w + v;
      const std::size_t j = mirror_index(u, v, h, w);
      if (i == j) {
        phase[i] = std::abs(wrap_phase(phase[i])) <= kPi / 2 ? 0.0 : kPi;
      } else if (i < j) {
        const double avg = 0.5 * (mag[i] + mag[j]);
        mag[i] = avg;
        mag[j] = avg;
        phase[i] = wrap_phase(phase[i]);
        phase[j] = wrap_phase(-phase[i]);
      }
    }
  }
  return {std::move(mag), std::move(phase)};
}

double hermitian_residual(const ComplexField& field) {
  double r = 0.0;
  for (std::size_t u = 0; u < field.height(); ++u) {
    for (std::size_t v = 0; v < field.width(); ++v) {
      const auto& a = field(u, v);
      const auto& b = field[mirror_index(u, v, field.height(), field.width())];
      r = std::max(r, std::abs(a - std::conj(b)));
    }
  }
  return r;
}

ImageGrid phase_mix(const ImageGrid& phase_source, const ImageGrid& magnitude_source) {
  require_same_shape(phase_source, magnitude_source, "phase_mix");
  const PhaseField ph = phase(fft2(phase_source));
  const MagnitudeField mag = magnitude(fft2(magnitude_source));
  return ifft2(compose(mag, ph));
}

}  // namespace phipd::spectral
