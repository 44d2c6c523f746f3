#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace gradkrig {

/// splitmix64 step; used to derive independent stream seeds from
/// (seed, stream) pairs so parallel probe loops stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(mix_seed(seed, stream));
}

inline Eigen::VectorXd rademacher_vector(Eigen::Index n, std::uint64_t seed,
                                         std::uint64_t stream = 0) {
  auto rng = seeded_rng(seed, stream);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = (rng() & 1ULL) ? 1.0 : -1.0;
  return z;
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, std::uint64_t seed,
                                       std::uint64_t stream = 0) {
  auto rng = seeded_rng(seed, stream);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = dist(rng);
  return z;
}

}  // namespace gradkrig
