#include "phipd/corpus.hpp"

#include "phipd/error.hpp"
#include "phipd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace phipd::corpus {

namespace {

constexpr int kTextureWaves = 4;

struct Local {
  double x;
  double y;
};

Local to_local(const Shape& s, double x, double y) {
  const double dx = x - s.center_x;
  const double dy = y - s.center_y;
  const double c = std::cos(s.rotation);
  const double sn = std::sin(s.rotation);
  return {c * dx + sn * dy, -sn * dx + c * dy};
}

struct Wave {
  double fx;
  double fy;
  double phase;
};

// A few low-frequency plane waves; their mean never exceeds one in magnitude.
std::vector<Wave> texture_waves(const Shading& shading) {
  Rng rng(shading.texture_seed);
  std::vector<Wave> waves(kTextureWaves);
  for (auto& w : waves) {
    w.fx = static_cast<double>(rng.below(5)) - 2.0;
    w.fy = static_cast<double>(rng.below(4)) + 1.0;
    w.phase = 2.0 * std::numbers::pi * rng.uniform();
  }
  return waves;
}

double texture(const std::vector<Wave>& waves, double amplitude, int size, double x, double y) {
  if (amplitude == 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& w : waves) {
    sum += std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) / size + w.phase);
  }
  return amplitude * sum / static_cast<double>(waves.size());
}

}  // namespace

void SynthCorpusConfig::validate() const {
  std::vector<std::string> bad;
  if (count < 1) bad.emplace_back("count");
  if (size < 16) bad.emplace_back("size");
  if (min_objects < 0 || max_objects < min_objects) bad.emplace_back("objects_per_image");
  if (!bad.empty()) {
    std::string msg = "invalid corpus config:";
    for (const auto& b : bad) msg += " " + b;
    throw InvalidArgument(msg);
  }
}

double signed_distance(const Shape& shape, double x, double y) {
  const Local p = to_local(shape, x, y);
  if (shape.kind == ShapeKind::rectangle) {
    const double qx = std::abs(p.x) - shape.half_x;
    const double qy = std::abs(p.y) - shape.half_y;
    const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
    return outside + std::min(std::max(qx, qy), 0.0);
  }
  // First-order ellipse distance: level-set value over its gradient norm.
  const double a = shape.half_x;
  const double b = shape.half_y;
  const double q = std::sqrt((p.x / a) * (p.x / a) + (p.y / b) * (p.y / b));
  if (q < 1e-9) return -std::min(a, b);
  const double gx = p.x / (a * a);
  const double gy = p.y / (b * b);
  const double grad = std::sqrt(gx * gx + gy * gy) / q;
  return (q - 1.0) / grad;
}

double bounding_radius(const Shape& shape) {
  return shape.kind == ShapeKind::ellipse ? std::max(shape.half_x, shape.half_y)
                                          : std::hypot(shape.half_x, shape.half_y);
}

SamplePair render_pair(const Geometry& geometry, int size, const Shading& shading) {
  if (size < 2) throw InvalidArgument("render_pair: size must be >= 2");
  const double hi = static_cast<double>(size - 1);
  for (std::size_t k = 0; k < geometry.shapes.size(); ++k) {
    const Shape& s = geometry.shapes[k];
    const double br = bounding_radius(s);
    if (!(s.half_x > 0.0 && s.half_y > 0.0) || s.center_x - br < 0.0 || s.center_x + br > hi ||
        s.center_y - br < 0.0 || s.center_y + br > hi) {
      throw InvalidArgument("render_pair: shape " + std::to_string(k) + " leaves the canvas");
    }
  }
  if (shading.texture_amplitude > kMaxTextureAmplitude || shading.texture_amplitude < 0.0) {
    throw InvalidArgument("render_pair: texture amplitude outside [0, 0.05]");
  }

  SamplePair pair{ImageGrid(size, size), ImageGrid(size, size), geometry, shading};
  const double center = hi / 2.0;
  const double reach = center * std::numbers::sqrt2;
  const double cg = std::cos(shading.gradient_direction);
  const double sg = std::sin(shading.gradient_direction);
  const std::vector<Wave> waves = texture_waves(shading);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double flat = geometry.background;
      double soft = geometry.background;
      for (const Shape& s : geometry.shapes) {
        const double d = signed_distance(s, x, y);
        if (d <= 0.0) flat = s.intensity;
        const double coverage = std::clamp(0.5 - d, 0.0, 1.0);
        soft = soft * (1.0 - coverage) + s.intensity * coverage;
      }
      double ramp = 0.0;
      if (shading.gradient_amplitude != 0.0 && reach > 0.0) {
        ramp = shading.gradient_amplitude * ((x - center) * cg + (y - center) * sg) / reach;
      }
      pair.flat(y, x) = std::clamp(flat, 0.0, 1.0);
      pair.shaded(y, x) = std::clamp(soft + ramp + texture(waves, shading.texture_amplitude, size, x, y), 0.0, 1.0);
    }
  }
  return pair;
}

SamplePair generate_pair(const SynthCorpusConfig& config, std::size_t index) {
  config.validate();
  Rng rng = Rng(config.seed).substream(index);
  const double size = config.size;
  const double hi = size - 1.0;

  Geometry geometry;
  geometry.background = 0.3 * rng.uniform();
  const auto span = static_cast<std::uint64_t>(config.max_objects - config.min_objects + 1);
  const int objects = config.min_objects + static_cast<int>(rng.below(span));
  for (int k = 0; k < objects; ++k) {
    Shape s;
    s.kind = rng.uniform() < 0.5 ? ShapeKind::ellipse : ShapeKind::rectangle;
    s.half_x = size * (0.08 + 0.17 * rng.uniform());
    s.half_y = size * (0.08 + 0.17 * rng.uniform());
    s.rotation = std::numbers::pi * rng.uniform();
    const double br = bounding_radius(s);
    s.center_x = br + (hi - 2.0 * br) * rng.uniform();
    s.center_y = br + (hi - 2.0 * br) * rng.uniform();
    s.intensity = 0.45 + 0.55 * rng.uniform();
    geometry.shapes.push_back(s);
  }

  Shading shading;
  shading.gradient_direction = 2.0 * std::numbers::pi * rng.uniform();
  shading.gradient_amplitude = kMaxGradientAmplitude * (0.5 + 0.5 * rng.uniform());
  shading.texture_amplitude = kMaxTextureAmplitude * (0.4 + 0.6 * rng.uniform());
  shading.texture_seed = rng.next_u64();
  return render_pair(geometry, config.size, shading);
}

std::vector<SamplePair> generate_corpus(const SynthCorpusConfig& config) {
  config.validate();
  std::vector<SamplePair> out;
  out.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) out.push_back(generate_pair(config, i));
  return out;
}

}  // namespace phipd::corpus
