#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace opinionpool::rng {

/// splitmix64 finalizer; bijective on 64-bit words with strong avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a root seed and a path of indices.
/// Equal (root, path) pairs give equal seeds on every platform and thread.
std::uint64_t derive(std::uint64_t root, std::initializer_list<std::uint64_t> path);

/// Deterministic random stream.
///
/// Uses the bit-specified mt19937_64 engine. Normal variates use the polar
/// method on top of it rather than std::normal_distribution, whose output
/// sequence is implementation defined.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal draw (polar method, pairs cached).
  double normal();

  /// Index draw from a normalized weight vector by inverse CDF walk.
  Eigen::Index categorical(const Eigen::Ref<const Eigen::VectorXd>& weights);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace opinionpool::rng
