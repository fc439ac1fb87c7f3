#include "closedloop/rng.hpp"

#include <cmath>

namespace closedloop {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  // FNV-1a over the stream name, then mixed with the root.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(root ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(root ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  // 53 random bits mapped onto [0, 1], endpoints included.
  const double u = static_cast<double>(engine_() >> 11) / 9007199254740991.0;
  return lo + (hi - lo) * u;
}

int Rng::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(engine_);
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::standard_normal() {
  // Box-Muller on two fresh draws; no cached state so substreams stay aligned.
  const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) / 9007199254740992.0;
  const double u2 = static_cast<double>(engine_() >> 11) / 9007199254740992.0;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool Rng::bernoulli(double p) {
  const double u = static_cast<double>(engine_() >> 11) / 9007199254740992.0;
  return u < p;
}

}  // namespace closedloop
