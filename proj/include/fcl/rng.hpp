#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "fcl/matrix.hpp"

namespace fcl {

/// Splittable random stream. Children are derived from the parent's seed and a
/// name (or index) only, so splitting never depends on how much of the parent
/// has already been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] Rng split(std::string_view stream) const;
  [[nodiscard]] Rng split(std::uint64_t index) const;

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  [[nodiscard]] Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace fcl
