#include "gevsel/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace gevsel;

TEST_CASE("SplitMix64 reference values") {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  CounterRng rng(0);
  CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next_u64() == 0x06C45D188009454FULL);
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("uniform draws stay in range and have the right moments") {
  CounterRng rng(3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 0.005);

  for (int i = 0; i < 1000; ++i) {
    const int k = rng.uniform_int(-2, 4);
    CHECK(k >= -2);
    CHECK(k <= 4);
  }
  CHECK_THROWS(rng.uniform_int(3, 2));
}

TEST_CASE("normal draws have unit variance") {
  CounterRng rng(5);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sampling without replacement") {
  CounterRng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = rng.sample_without_replacement(10, 4);
    CHECK(s.size() == 4);
    CHECK(std::set<int>(s.begin(), s.end()).size() == 4);
    for (int v : s) {
      CHECK(v >= 0);
      CHECK(v < 10);
    }
  }
  // Every index is roughly equally likely.
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i)
    for (int v : rng.sample_without_replacement(6, 2)) ++counts[v];
  for (int c : counts) CHECK(std::abs(c - 20000) < 600);
}
