#include <limits>
#include <stdexcept>

#include "bfreg/matrix.hpp"
#include "doctest.h"

using bfreg::Matrix;

TEST_CASE("matrix shape and data validation") {
  Matrix m(2, 3);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 0.0);

  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(
      Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      Matrix(1, 1, {std::numeric_limits<double>::infinity()}),
      std::invalid_argument);
}

TEST_CASE("identity and reshape") {
  Matrix i = Matrix::identity(3);
  CHECK(i(0, 0) == 1.0);
  CHECK(i(0, 1) == 0.0);

  Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
  Matrix r = m.reshaped(3, 2);
  CHECK(r(0, 1) == 2.0);
  CHECK(r(2, 1) == 6.0);
  CHECK_THROWS_AS(m.reshaped(4, 2), std::invalid_argument);
}

TEST_CASE("solve_linear against hand-solved systems") {
  // x + y = 3, x - y = 1 -> x = 2, y = 1
  Matrix a(2, 2, {1, 1, 1, -1});
  Matrix b(2, 1, {3, 1});
  Matrix x = bfreg::solve_linear(a, b);
  CHECK(x(0, 0) == doctest::Approx(2.0));
  CHECK(x(1, 0) == doctest::Approx(1.0));

  Matrix singular(2, 2, {1, 2, 2, 4});
  CHECK_THROWS_AS(bfreg::solve_linear(singular, b), std::runtime_error);
}

TEST_CASE("spectral radius of a scaled permutation") {
  // cyclic shift has radius 1; scaled by 0.3 -> 0.3
  Matrix a(2, 2, {0, 0.3, 0.3, 0});
  CHECK(bfreg::spectral_radius(a) == doctest::Approx(0.3).epsilon(1e-6));
}
