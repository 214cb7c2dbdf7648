#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fairimb/rng.hpp"

using fairimb::Rng;

TEST_SUITE("rng") {

TEST_CASE("streams are pure functions of the seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform01 stays in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(11);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v(50), w(50);
  std::iota(v.begin(), v.end(), 0);
  std::iota(w.begin(), w.end(), 0);
  Rng a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(50);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
}

TEST_CASE("mix_seed separates sub-streams") {
  CHECK(fairimb::mix_seed(1, 0) != fairimb::mix_seed(1, 1));
  CHECK(fairimb::mix_seed(1, 0) != fairimb::mix_seed(2, 0));
  CHECK(fairimb::mix_seed(1, 5) == fairimb::mix_seed(1, 5));
}

}  // TEST_SUITE
