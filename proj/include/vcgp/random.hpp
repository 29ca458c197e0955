#ifndef VCGP_RANDOM_HPP_
#define VCGP_RANDOM_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string_view>

namespace vcgp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for a named component: splitmix64(seed XOR fnv1a64(name)).
/// Every random stream in an experiment is keyed this way, so any single
/// fold can be replayed from the global seed and its name alone.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : name) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ hash);
}

inline Eigen::VectorXd standard_normal(Eigen::Index n, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = normal(rng);
  }
  return out;
}

} // namespace vcgp

#endif
