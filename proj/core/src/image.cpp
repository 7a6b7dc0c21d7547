#include "phipd/image.hpp"

#include "phipd/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace phipd {

void validate_image(const ImageGrid& img) {
  if (img.height() < 2 || img.width() < 2) {
    throw InvalidArgument("image must be at least 2x2, got " + std::to_string(img.height()) +
                          "x" + std::to_string(img.width()));
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!std::isfinite(img[i])) {
      throw DataError("non-finite value at (" + std::to_string(i / img.width()) + ", " +
                      std::to_string(i % img.width()) + ")");
    }
  }
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* context) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(context) + ": shape mismatch " +
                          std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                          std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

ImageGrid operator+(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator+");
  ImageGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ImageGrid operator-(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator-");
  ImageGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

ImageGrid operator*(double s, const ImageGrid& a) {
  ImageGrid out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

double max_abs_diff(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double mean(const ImageGrid& img) {
  double s = 0.0;
  for (double v : img.values()) s += v;
  return img.empty() ? 0.0 : s / static_cast<double>(img.size());
}

double variance(const ImageGrid& img) {
  if (img.empty()) return 0.0;
  const double m = mean(img);
  double s = 0.0;
  for (double v : img.values()) s += (v - m) * (v - m);
  return s / static_cast<double>(img.size());
}

}  // namespace phipd
