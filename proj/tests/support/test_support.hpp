#pragma once

#include "phipd/corpus.hpp"
#include "phipd/image.hpp"
#include "phipd/rng.hpp"
#include "phipd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

namespace phipd::testing {

inline ImageGrid random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  ImageGrid img(h, w);
  for (double& v : img.storage()) v = rng.normal();
  return img;
}

/// Flat corpus image of the given size, fixed by seed.
inline ImageGrid shape_image(int size, std::uint64_t seed, std::size_t index = 0) {
  corpus::SynthCorpusConfig cfg;
  cfg.size = size;
  cfg.seed = seed;
  return corpus::generate_pair(cfg, index).flat;
}

/// Largest circular phase error of `field` against `reference` over bins where
/// `field` has magnitude above `floor`.
inline double max_phase_error(const ComplexField& field, const PhaseField& reference,
                              double floor = 1e-9) {
  const auto [mag, ph] = spectral::decompose(field);
  double worst = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] > floor) worst = std::max(worst, spectral::circular_distance(ph[i], reference[i]));
  }
  return worst;
}

inline double max_abs(const ComplexField& a, const ComplexField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("phipd_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace phipd::testing
