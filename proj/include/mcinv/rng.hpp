#pragma once

#include <cstdint>
#include <random>

#include "mcinv/linalg.hpp"

namespace mcinv {

/// Seed for stream `stream` of master seed `master`. Streams are keyed so a
/// value never depends on which worker computed it or in what order.
std::uint64_t streamSeed(std::uint64_t master, std::uint64_t stream);

/// Seed for a two-level key, e.g. (repetition, purpose).
std::uint64_t streamSeed(std::uint64_t master, std::uint64_t stream, std::uint64_t sub);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  Matrix normalMatrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mcinv
