#pragma once

#include "phipd/image.hpp"

#include <cstdint>
#include <vector>

// Paired synthetic images. "flat" renders are hard-edged constant shapes
// (simulator-like); "shaded" renders share the geometry but add soft edges,
// an illumination ramp and low-frequency texture.

namespace phipd::corpus {

enum class ShapeKind { ellipse, rectangle };

struct Shape {
  ShapeKind kind = ShapeKind::ellipse;
  double center_x = 0.0;
  double center_y = 0.0;
  /// Semi-axes for ellipses, half-extents for rectangles.
  double half_x = 1.0;
  double half_y = 1.0;
  double rotation = 0.0;  // radians
  double intensity = 1.0;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Parameters of the shaded render that are not part of the geometry.
struct Shading {
  double gradient_direction = 0.0;  // radians
  double gradient_amplitude = 0.0;  // ramp spans [-amp, +amp]
  double texture_amplitude = 0.0;   // <= kMaxTextureAmplitude
  std::uint64_t texture_seed = 0;

  friend bool operator==(const Shading&, const Shading&) = default;
};

struct Geometry {
  std::vector<Shape> shapes;  // painted in order, later shapes on top
  double background = 0.1;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline constexpr double kMaxGradientAmplitude = 0.1;
inline constexpr double kMaxTextureAmplitude = 0.05;

struct SamplePair {
  ImageGrid flat;
  ImageGrid shaded;
  Geometry geometry;
  Shading shading;
};

struct SynthCorpusConfig {
  int count = 100;
  int size = 64;
  std::uint64_t seed = 0;
  int min_objects = 1;
  int max_objects = 3;

  void validate() const;
};

/// Signed distance from (x, y) to the shape boundary; negative inside.
double signed_distance(const Shape& shape, double x, double y);
/// Radius of a disk around the center that contains the whole shape.
double bounding_radius(const Shape& shape);

/// Throws InvalidArgument when a shape leaves the canvas.
SamplePair render_pair(const Geometry& geometry, int size, const Shading& shading = {});

/// Pair i is drawn from Rng(seed).substream(i).
std::vector<SamplePair> generate_corpus(const SynthCorpusConfig& config);
SamplePair generate_pair(const SynthCorpusConfig& config, std::size_t index);

}  // namespace phipd::corpus
