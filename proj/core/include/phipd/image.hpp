#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace phipd {

/// Row-major H x W grid of values. Shared storage for spatial images and the
/// frequency-domain fields below.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), values_(height * width, fill) {}
  Grid(std::size_t height, std::size_t width, std::vector<T> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const {
    return values_[row * width_ + col];
  }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() & noexcept { return values_; }
  std::span<const T> values() const& noexcept { return values_; }
  // A span into a temporary grid would dangle.
  std::span<const T> values() && = delete;
  std::span<const T> values() const&& = delete;
  std::vector<T>& storage() noexcept { return values_; }
  const std::vector<T>& storage() const noexcept { return values_; }

  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> values_;
};

template <typename T>
Grid<T>::Grid(std::size_t height, std::size_t width, std::vector<T> values)
    : height_(height), width_(width), values_(std::move(values)) {
  values_.resize(height * width);
}

/// Real-valued raster. Holds images, noise, interpolants and velocities.
using ImageGrid = Grid<double>;
/// Complex spectrum in DFT index order: (0,0) is DC, no center shift.
using ComplexField = Grid<std::complex<double>>;
/// |F(u,v)|; nonnegative, Hermitian-symmetric when valid.
using MagnitudeField = Grid<double>;
/// arg F(u,v) in (-pi, pi]; Hermitian-antisymmetric when valid.
using PhaseField = Grid<double>;

/// Throws InvalidArgument if dims < 2 and DataError naming the first non-finite index.
void validate_image(const ImageGrid& img);
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* context);

/// Elementwise helpers used throughout the diffusion code.
ImageGrid operator+(const ImageGrid& a, const ImageGrid& b);
ImageGrid operator-(const ImageGrid& a, const ImageGrid& b);
ImageGrid operator*(double s, const ImageGrid& a);

double max_abs_diff(const ImageGrid& a, const ImageGrid& b);
double mean(const ImageGrid& img);
/// Population variance (divides by N).
double variance(const ImageGrid& img);

}  // namespace phipd
