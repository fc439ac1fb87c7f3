#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace closedloop {

/// Mixes a root seed with a stream name into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Seeded random source. Every stochastic stage owns one of these, derived
/// from the configured root seed through a named substream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng substream(std::string_view name) const { return Rng(derive_seed(seed_, name)); }
  Rng substream(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

  /// Uniform on [lo, hi].
  double uniform(double lo, double hi);
  /// Uniform integer on [lo, hi].
  int uniform_int(int lo, int hi);
  /// Uniform index on [0, n).
  std::size_t index(std::size_t n);
  double standard_normal();
  bool bernoulli(double p);
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace closedloop
