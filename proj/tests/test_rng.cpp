#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "jace/rng.hpp"

using jace::Rng;

TEST_CASE("identical seed and call sequence give identical draws") {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1);
  Rng b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same < 5);
}

TEST_CASE("split does not advance the parent stream") {
  Rng a(7);
  const std::uint64_t before = a.state();
  (void)a.split(3);
  (void)a.split(4);
  CHECK(a.state() == before);
  Rng b(7);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("split streams differ from the parent and from each other") {
  const Rng a(99);
  Rng s1 = a.split(1);
  Rng s2 = a.split(2);
  Rng parent = a;
  const std::uint64_t u1 = s1.next_u64();
  CHECK(u1 != s2.next_u64());
  CHECK(u1 != parent.next_u64());
}

TEST_CASE("uniform stays strictly inside (0, 1)") {
  Rng rng(5);
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform(lo, hi) respects the bounds") {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.5, 1.5);
    CHECK(u > -2.5);
    CHECK(u < 1.5);
  }
}

TEST_CASE("uniform_int covers [0, bound) roughly evenly") {
  Rng rng(11);
  std::vector<int> counts(8, 0);
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(8)];
  for (int c : counts) {
    CHECK(c > n / 8 - 800);
    CHECK(c < n / 8 + 800);
  }
  Rng one(12);
  for (int i = 0; i < 100; ++i) CHECK(one.uniform_int(1) == 0);
}

TEST_CASE("gumbel draws are finite and centered near Euler's constant") {
  Rng rng(13);
  double sum = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gumbel();
    REQUIRE(std::isfinite(g));
    sum += g;
  }
  CHECK(sum / n == doctest::Approx(0.5772).epsilon(0.05));
}

TEST_CASE("bernoulli edge probabilities") {
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) CHECK_FALSE(rng.bernoulli(0.0));
  for (int i = 0; i < 1000; ++i) CHECK(rng.bernoulli(1.0));
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(21);
  Rng b(21);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(50);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
}
