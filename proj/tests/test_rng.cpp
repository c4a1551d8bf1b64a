#include <cmath>
#include <vector>

#include "bfreg/rng.hpp"
#include "doctest.h"

using bfreg::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("split streams are independent of parent state") {
  Rng parent(9);
  Rng c1 = parent.split("init");
  parent.next_u64();  // advancing the parent must not change children
  Rng c2 = parent.split("init");
  for (int i = 0; i < 20; ++i) CHECK(c1.next_u64() == c2.next_u64());

  Rng other = parent.split("mask");
  CHECK(other.next_u64() != parent.split("init").next_u64());
}

TEST_CASE("uniform stays in range and normal has sane moments") {
  Rng rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.05);
  CHECK(std::fabs(sq / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::vector<bool> seen(8, false);
  for (int x : v) seen[static_cast<std::size_t>(x)] = true;
  for (bool s : seen) CHECK(s);
}
