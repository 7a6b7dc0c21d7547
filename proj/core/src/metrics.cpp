#include "phipd/metrics.hpp"

#include "phipd/error.hpp"
#include "phipd/noise.hpp"
#include "phipd/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace phipd::metrics {

namespace {

constexpr double kMinMagnitude = 1e-9;

void require_nonzero(const ImageGrid& img, const char* context) {
  const bool all_zero = std::all_of(img.values().begin(), img.values().end(),
                                    [](double v) { return v == 0.0; });
  if (all_zero) throw DataError(std::string(context) + ": input is identically zero");
}

}  // namespace

double phase_correlation(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "phase_correlation");
  require_nonzero(a, "phase_correlation");
  require_nonzero(b, "phase_correlation");
  const auto [mag_a, ph_a] = spectral::decompose(spectral::fft2(a));
  const auto [mag_b, ph_b] = spectral::decompose(spectral::fft2(b));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i < mag_a.size(); ++i) {
    if (mag_a[i] > kMinMagnitude && mag_b[i] > kMinMagnitude) {
      sum += std::cos(ph_a[i] - ph_b[i]);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double ssim(const ImageGrid& a, const ImageGrid& b, int window) {
  require_same_shape(a, b, "ssim");
  if (window < 1) throw InvalidArgument("ssim: window must be >= 1");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int h = static_cast<int>(a.height());
  const int w = static_cast<int>(a.width());
  const int wy = std::min(window, h);
  const int wx = std::min(window, w);
  const double n = static_cast<double>(wy) * wx;

  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + wy <= h; ++y0) {
    for (int x0 = 0; x0 + wx <= w; ++x0) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int y = y0; y < y0 + wy; ++y) {
        for (int x = x0; x < x0 + wx; ++x) {
          const double va = a(y, x);
          const double vb = b(y, x);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      }
      const double mu_a = sa / n;
      const double mu_b = sb / n;
      const double var_a = saa / n - mu_a * mu_a;
      const double var_b = sbb / n - mu_b * mu_b;
      const double cov = sab / n - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++windows;
    }
  }
  return total / windows;
}

ImageGrid gradient_magnitude(const ImageGrid& img) {
  const int h = static_cast<int>(img.height());
  const int w = static_cast<int>(img.width());
  auto at = [&](int y, int x) {
    return img(static_cast<std::size_t>(std::clamp(y, 0, h - 1)),
               static_cast<std::size_t>(std::clamp(x, 0, w - 1)));
  };
  ImageGrid out(img.height(), img.width());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
      out(y, x) = std::hypot(gx, gy);
    }
  }
  return out;
}

std::vector<bool> edge_map(const ImageGrid& img, double quantile) {
  if (!(quantile >= 0.0 && quantile <= 1.0)) {
    throw InvalidArgument("edge_map: quantile must lie in [0, 1]");
  }
  const ImageGrid grad = gradient_magnitude(img);
  std::vector<double> sorted(grad.values().begin(), grad.values().end());
  const auto k = static_cast<std::size_t>(std::floor(quantile * (sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double threshold = sorted[k];
  std::vector<bool> edges(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) edges[i] = grad[i] > threshold;
  return edges;
}

double edge_iou(const ImageGrid& a, const ImageGrid& b, double quantile) {
  require_same_shape(a, b, "edge_iou");
  const auto ea = edge_map(a, quantile);
  const auto eb = edge_map(b, quantile);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    inter += ea[i] && eb[i];
    uni += ea[i] || eb[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> radial_magnitude_profile(const ImageGrid& img) {
  const MagnitudeField mag = spectral::magnitude(spectral::fft2(img));
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const auto rings =
      static_cast<std::size_t>(std::lround(noise::radial_distance(h / 2, w / 2, h, w))) + 1;
  std::vector<double> sum(rings, 0.0);
  std::vector<double> count(rings, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      const auto ring = static_cast<std::size_t>(std::lround(noise::radial_distance(u, v, h, w)));
      sum[ring] += mag(u, v);
      count[ring] += 1.0;
    }
  }
  for (std::size_t r = 0; r < rings; ++r) sum[r] = count[r] > 0.0 ? sum[r] / count[r] : 0.0;
  return sum;
}

double profile_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) {
    throw InvalidArgument("profile_distance: profiles differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(std::log1p(p[i]) - std::log1p(q[i]));
  return total / static_cast<double>(p.size());
}

double log_mag_distance(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "log_mag_distance");
  return profile_distance(radial_magnitude_profile(a), radial_magnitude_profile(b));
}

MetricsReport evaluate(const ImageGrid& a, const ImageGrid& b) {
  return {phase_correlation(a, b), ssim(a, b), edge_iou(a, b), log_mag_distance(a, b)};
}

}  // namespace phipd::metrics
