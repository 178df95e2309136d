#include "jace/rng.hpp"

#include <cmath>

namespace jace {

namespace {

// splitmix64 output function (Vigna). One 64-bit multiply-xor chain per draw.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  std::uint64_t x = z;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::split(std::uint64_t stream_id) const {
  // Derive the child seed by hashing (state, stream_id) twice through the
  // mixer; children with distinct ids get distinct, decorrelated streams.
  std::uint64_t h = mix(state_ ^ 0xa0761d6478bd642fULL);
  h = mix(h ^ mix(stream_id ^ 0xe7037ed1a0b428dbULL));
  return Rng(h);
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform() {
  // 53 random bits, offset by half an ulp so the result lies in (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::gumbel() { return -std::log(-std::log(uniform())); }

bool Rng::bernoulli(double p) { return uniform() < p; }

}  // namespace jace
