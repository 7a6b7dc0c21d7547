#include "phipd/error.hpp"
#include "phipd/metrics.hpp"
#include "phipd/spectral.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

using namespace phipd;
using phipd::testing::random_image;

TEST_SUITE("spectral") {

TEST_CASE("fft2 of a constant image has only a DC term") {
  const double c = 0.7;
  const ComplexField f = spectral::fft2(ImageGrid(8, 8, c));
  CHECK(std::abs(f[0] - std::complex<double>(8.0 * c, 0.0)) < 1e-12);
  for (std::size_t i = 1; i < f.size(); ++i) CHECK(std::abs(f[i]) < 1e-12);
}

TEST_CASE("fft2 of an impulse is flat at 1/sqrt(HW)") {
  ImageGrid img(4, 4, 0.0);
  img(0, 0) = 1.0;
  const ComplexField f = spectral::fft2(img);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(std::abs(f[i] - std::complex<double>(0.25, 0.0)) < 1e-15);
  }
}

TEST_CASE("round trip, Hermitian output and Parseval over assorted sizes") {
  const std::pair<std::size_t, std::size_t> sizes[] = {{2, 2}, {4, 4}, {5, 7}, {16, 16},
                                                       {9, 12}, {32, 17}, {64, 64}};
  std::uint64_t seed = 1;
  for (auto [h, w] : sizes) {
    CAPTURE(h);
    CAPTURE(w);
    const ImageGrid x = random_image(h, w, seed++);
    const ComplexField f = spectral::fft2(x);
    CHECK(max_abs_diff(spectral::ifft2(f), x) < 1e-12);
    CHECK(spectral::hermitian_residual(f) < 1e-12);
    double energy_space = 0.0, energy_freq = 0.0;
    for (double v : x.values()) energy_space += v * v;
    for (const auto& c : f.values()) energy_freq += std::norm(c);
    CHECK(std::abs(energy_freq - energy_space) / energy_space < 1e-9);
  }
}

TEST_CASE("fft2 rejects non-finite pixels and names the index") {
  ImageGrid img(4, 5, 0.0);
  img(2, 3) = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)spectral::fft2(img);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(2, 3)") != std::string::npos);
  }
  CHECK_THROWS_AS(spectral::fft2(ImageGrid(1, 8, 0.0)), InvalidArgument);
}

TEST_CASE("ifft2 of zeros is zero; broken symmetry is reported") {
  const ImageGrid zero = spectral::ifft2(ComplexField(6, 6));
  for (double v : zero.values()) CHECK(v == 0.0);

  ComplexField f = spectral::fft2(random_image(8, 8, 3));
  f(1, 2) += 1.0;
  CHECK_THROWS_AS(spectral::ifft2(f), SymmetryViolation);
}

TEST_CASE("decompose follows atan2 with the (-pi, pi] branch") {
  ComplexField f(2, 2);
  f[0] = {3.0, 4.0};
  f[1] = {-1.0, 0.0};
  f[2] = {-1.0, -0.0};
  f[3] = {0.0, 0.0};
  const auto [mag, ph] = spectral::decompose(f);
  CHECK(mag[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(ph[0] == doctest::Approx(0.92730).epsilon(1e-5));
  CHECK(ph[0] == std::atan2(4.0, 3.0));
  CHECK(mag[1] == 1.0);
  CHECK(ph[1] == std::numbers::pi);
  CHECK(ph[2] == std::numbers::pi);
  CHECK(mag[3] == 0.0);
  CHECK(ph[3] == 0.0);
}

TEST_CASE("compose basics and errors") {
  const ComplexField ones = spectral::compose(MagnitudeField(3, 3, 1.0), PhaseField(3, 3, 0.0));
  for (const auto& c : ones.values()) CHECK(c == std::complex<double>(1.0, 0.0));
  const ComplexField zeros = spectral::compose(MagnitudeField(3, 3, 0.0), PhaseField(3, 3, 1.3));
  for (const auto& c : zeros.values()) CHECK(std::abs(c) == 0.0);

  CHECK_THROWS_AS(spectral::compose(MagnitudeField(3, 3, 1.0), PhaseField(3, 4, 0.0)),
                  InvalidArgument);
  MagnitudeField neg(3, 3, 1.0);
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(spectral::compose(neg, PhaseField(3, 3, 0.0)), InvalidArgument);
}

TEST_CASE("compose and decompose invert each other on Hermitian fields") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const ComplexField f = spectral::fft2(random_image(12, 10, seed));
    const auto [mag, ph] = spectral::decompose(f);
    const ComplexField back = spectral::compose(mag, ph);
    CHECK(phipd::testing::max_abs(back, f) < 1e-12);

    const auto [mag2, ph2] = spectral::decompose(back);
    for (std::size_t i = 0; i < mag.size(); ++i) {
      CHECK(std::abs(mag2[i] - mag[i]) < 1e-12);
      CHECK(spectral::circular_distance(ph2[i], ph[i]) < 1e-12);
    }
  }
}

TEST_CASE("hermitian_project averages mirrored magnitudes") {
  MagnitudeField mag(4, 4, 1.0);
  mag(1, 1) = 2.0;
  mag(3, 3) = 4.0;  // mirror of (1, 1)
  const auto [m, p] = spectral::hermitian_project(mag, PhaseField(4, 4, 0.0));
  CHECK(m(1, 1) == 3.0);
  CHECK(m(3, 3) == 3.0);
}

TEST_CASE("hermitian_project is idempotent and satisfies both invariants") {
  for (std::size_t h : {4u, 5u, 8u}) {
    for (std::size_t w : {4u, 7u}) {
      Rng rng(h * 31 + w);
      MagnitudeField mag(h, w);
      PhaseField ph(h, w);
      for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = rng.uniform() * 3.0;
        ph[i] = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
      }
      const auto once = spectral::hermitian_project(mag, ph);
      const auto twice = spectral::hermitian_project(once.first, once.second);
      CHECK(twice.first == once.first);
      CHECK(twice.second == once.second);

      for (std::size_t u = 0; u < h; ++u) {
        for (std::size_t v = 0; v < w; ++v) {
          const std::size_t i = u * w + v;
          const std::size_t j = spectral::mirror_index(u, v, h, w);
          CHECK(once.first[i] == once.first[j]);
          CHECK(spectral::circular_distance(once.second[i], -once.second[j]) < 1e-15);
          if (i == j) CHECK((once.second[i] == 0.0 || once.second[i] == std::numbers::pi));
        }
      }
      // A projected pair composes into a field whose inverse is real.
      CHECK_NOTHROW(spectral::ifft2(spectral::compose(once.first, once.second)));
    }
  }
}

TEST_CASE("hermitian_project leaves an exactly symmetric pair unchanged") {
  const auto [mag, ph] = spectral::decompose(spectral::fft2(random_image(8, 6, 5)));
  const auto sym = spectral::hermitian_project(mag, ph);
  const auto again = spectral::hermitian_project(sym.first, sym.second);
  CHECK(max_abs_diff(again.first, sym.first) == 0.0);
  CHECK(max_abs_diff(again.second, sym.second) == 0.0);
}

TEST_CASE("self-conjugate bins") {
  CHECK(spectral::is_self_conjugate(0, 0, 8, 8));
  CHECK(spectral::is_self_conjugate(4, 0, 8, 8));
  CHECK(spectral::is_self_conjugate(4, 4, 8, 8));
  CHECK_FALSE(spectral::is_self_conjugate(1, 0, 8, 8));
  CHECK_FALSE(spectral::is_self_conjugate(2, 0, 5, 5));
}

TEST_CASE("phase_mix of an image with itself is the image") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImageGrid img = random_image(16, 16, 100 + seed);
    CHECK(max_abs_diff(spectral::phase_mix(img, img), img) < 1e-12);
  }
  CHECK_THROWS_AS(spectral::phase_mix(ImageGrid(4, 4, 1.0), ImageGrid(4, 5, 1.0)), InvalidArgument);
}

TEST_CASE("phase_mix output carries the phase source's phase") {
  const ImageGrid a = phipd::testing::shape_image(32, 1);
  const ImageGrid b = random_image(32, 32, 9);
  const ImageGrid mixed = spectral::phase_mix(a, b);
  const PhaseField expected = spectral::phase(spectral::fft2(a));
  CHECK(phipd::testing::max_phase_error(spectral::fft2(mixed), expected) < 1e-9);
}

TEST_CASE("phase_mix keeps the structure of the phase source") {
  // Demo pair shipped with the CLI: flat renders 0 and 1 of corpus seed 7.
  const ImageGrid phase_src = phipd::testing::shape_image(64, 7, 0);
  const ImageGrid mag_src = phipd::testing::shape_image(64, 7, 1);
  const ImageGrid mixed = spectral::phase_mix(phase_src, mag_src);
  const double to_phase = metrics::edge_iou(mixed, phase_src);
  const double to_mag = metrics::edge_iou(mixed, mag_src);
  INFO("edge IoU to phase source " << to_phase << ", to magnitude source " << to_mag);
  CHECK(to_phase > to_mag);
}

TEST_CASE("fft2 is safe to call from several threads") {
  const ImageGrid img = random_image(24, 20, 77);
  const ComplexField reference = spectral::fft2(img);
  std::vector<ComplexField> results(4);
  {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < results.size(); ++k) {
      pool.emplace_back([&, k] {
        for (int rep = 0; rep < 50; ++rep) results[k] = spectral::fft2(img);
      });
    }
  }
  for (const auto& r : results) CHECK(r == reference);
}

TEST_CASE("wrap_phase maps into (-pi, pi]") {
  CHECK(spectral::wrap_phase(-std::numbers::pi) == std::numbers::pi);
  CHECK(spectral::wrap_phase(3.0 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(spectral::wrap_phase(0.5) == 0.5);
  CHECK(spectral::circular_distance(std::numbers::pi - 0.01, -std::numbers::pi + 0.01) ==
        doctest::Approx(0.02));
}

}
