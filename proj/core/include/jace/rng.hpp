#pragma once

#include <cstdint>
#include <vector>

namespace jace {

// Deterministic, splittable random generator. All stochastic sites in the
// toolkit (parameter init, Gumbel noise, batch shuffling, dev splits) draw
// from an explicitly passed Rng stream, so identical (seed, call sequence)
// yields identical results on every platform. The core is splitmix64, whose
// output is fully specified by its recurrence; no standard-library
// distribution objects are used since their streams are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Child stream that is decorrelated from this one and from other ids.
  // Splitting does not advance this stream.
  Rng split(std::uint64_t stream_id) const;

  std::uint64_t next_u64();

  // Uniform in (0, 1); never returns an exact 0 or 1, so log() is safe.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, bound), bound >= 1. Rejection sampling, unbiased.
  std::uint64_t uniform_int(std::uint64_t bound);

  // Standard Gumbel(0, 1) sample: -log(-log(U)).
  double gumbel();

  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace jace
