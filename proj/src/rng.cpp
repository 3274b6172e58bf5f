#include "mcinv/rng.hpp"

namespace mcinv {

namespace {

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t streamSeed(std::uint64_t master, std::uint64_t stream) {
  return mix(mix(master) ^ mix(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t streamSeed(std::uint64_t master, std::uint64_t stream, std::uint64_t sub) {
  return streamSeed(streamSeed(master, stream), sub);
}

Matrix Rng::normalMatrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  // Column-major fill keeps column j independent of later columns.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal();
  return out;
}

}  // namespace mcinv
