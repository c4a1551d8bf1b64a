#include "bfreg/kernels.hpp"
#include "bfreg/rng.hpp"
#include "doctest.h"

using bfreg::Matrix;
namespace kernels = bfreg::kernels;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, bfreg::Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("matmul matches a hand-computed product") {
  Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
  Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
  Matrix c = kernels::matmul(a, b);
  CHECK(c(0, 0) == 58.0);
  CHECK(c(0, 1) == 64.0);
  CHECK(c(1, 0) == 139.0);
  CHECK(c(1, 1) == 154.0);
  CHECK_THROWS(kernels::matmul(a, a));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  bfreg::Rng rng(7);
  // large enough to clear the parallel grain
  Matrix a = random_matrix(80, 96, rng);
  Matrix b = random_matrix(96, 70, rng);

  CHECK(kernels::matmul(a, b) == kernels::serial::matmul(a, b));
  Matrix a2 = random_matrix(80, 96, rng);
  CHECK(kernels::add(a, a2) == kernels::serial::add(a, a2));
  CHECK(kernels::sub(a, a2) == kernels::serial::sub(a, a2));
  CHECK(kernels::hadamard(a, a2) == kernels::serial::hadamard(a, a2));
  CHECK(kernels::scale(a, 3.25) == kernels::serial::scale(a, 3.25));

  Matrix logits = random_matrix(90, 90, rng);
  Matrix mask(90, 90);
  for (double& v : mask.values()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
  CHECK(kernels::row_subset_softmax(logits, mask) ==
        kernels::serial::row_subset_softmax(logits, mask));

  Matrix h = random_matrix(48, 24, rng);
  CHECK(kernels::pairwise_concat(h) == kernels::serial::pairwise_concat(h));
}

TEST_CASE("row subset softmax honors the mask") {
  Matrix logits(2, 3, {1, 2, 3, 5, 5, 5});
  Matrix mask(2, 3, {1, 1, 0, 0, 0, 0});
  Matrix s = kernels::serial::row_subset_softmax(logits, mask);
  CHECK(s(0, 0) + s(0, 1) == doctest::Approx(1.0));
  CHECK(s(0, 2) == 0.0);
  // empty-subset row stays zero
  CHECK(s(1, 0) == 0.0);
  CHECK(s(1, 1) == 0.0);
  CHECK(s(1, 2) == 0.0);
}

TEST_CASE("pairwise concat layout") {
  Matrix h(2, 1, {10, 20});
  Matrix p = kernels::serial::pairwise_concat(h);
  REQUIRE(p.rows() == 4);
  REQUIRE(p.cols() == 2);
  // row i*n + j = [h_i, h_j]
  CHECK(p(0, 0) == 10.0);
  CHECK(p(0, 1) == 10.0);
  CHECK(p(1, 0) == 10.0);
  CHECK(p(1, 1) == 20.0);
  CHECK(p(2, 0) == 20.0);
  CHECK(p(2, 1) == 10.0);
}

TEST_CASE("parallel switch falls back to serial") {
  kernels::set_parallel_enabled(false);
  Matrix a(2, 2, {1, 2, 3, 4});
  CHECK(kernels::matmul(a, a) == kernels::serial::matmul(a, a));
  kernels::set_parallel_enabled(true);
}
