#pragma once

#include <cstdint>
#include <optional>

namespace phipd {

/// Seeded splittable generator: xoshiro256** state initialised via SplitMix64.
///
/// Substreams are derived from the construction seed only, never from the
/// current state, so `Rng(s).substream(k)` is the same stream no matter how
/// many draws the parent has made:
///
///   child_seed = splitmix64(seed ^ splitmix64(k + 0x9E3779B97F4A7C15))
///
/// The library uses substream keys for frame index (video noise), batch item
/// index (training) and per-step draws (samplers); see the callers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng substream(std::uint64_t key) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller; the second variate is cached).
  double normal() noexcept;
  /// Exponential with the given rate (> 0).
  double exponential(double rate) noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  std::optional<double> cached_normal_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace phipd
