#pragma once

#include "phipd/image.hpp"

#include <vector>

namespace phipd::metrics {

struct MetricsReport {
  double phase_correlation = 0.0;
  double ssim = 0.0;
  double edge_iou = 0.0;
  double log_mag_distance = 0.0;
};

/// Mean of cos(phi_a - phi_b) over non-DC bins where both magnitudes exceed 1e-9.
double phase_correlation(const ImageGrid& a, const ImageGrid& b);

/// Mean SSIM over all window x window positions (uniform weights, dynamic
/// range 1, C1 = 0.01^2, C2 = 0.03^2).
double ssim(const ImageGrid& a, const ImageGrid& b, int window = 8);

/// Sobel magnitude with replicated borders.
ImageGrid gradient_magnitude(const ImageGrid& img);
/// Pixels whose gradient magnitude is strictly above the per-image quantile.
std::vector<bool> edge_map(const ImageGrid& img, double quantile = 0.9);
/// IoU of the two edge maps; 1 when both are empty.
double edge_iou(const ImageGrid& a, const ImageGrid& b, double quantile = 0.9);

/// Mean |F| per integer ring of wrapped radial frequency.
std::vector<double> radial_magnitude_profile(const ImageGrid& img);
/// Mean |log1p(p) - log1p(q)| over rings.
double profile_distance(const std::vector<double>& p, const std::vector<double>& q);
double log_mag_distance(const ImageGrid& a, const ImageGrid& b);

MetricsReport evaluate(const ImageGrid& a, const ImageGrid& b);

}  // namespace phipd::metrics
