/*
 * Copyright 2026 the bfreg authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bfreg/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bfreg {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_str());
  }
  if (!all_finite()) {
    throw std::invalid_argument("Matrix: non-finite value in " + shape_str());
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols,
               std::initializer_list<double> data)
    : Matrix(rows, cols, std::vector<double>(data)) {}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("Matrix::filled: non-finite fill value");
  }
  Matrix m(rows, cols);
  std::fill(m.data_.begin(), m.data_.end(), value);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix Matrix::reshaped(std::size_t rows, std::size_t cols) const {
  if (rows * cols != data_.size()) {
    throw std::invalid_argument("Matrix::reshaped: element count mismatch (" +
                                shape_str() + " -> " + std::to_string(rows) +
                                "x" + std::to_string(cols) + ")");
  }
  Matrix m = *this;
  m.rows_ = rows;
  m.cols_ = cols;
  return m;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.same_shape(b) && a.values() == b.values();
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("max_abs_diff: shape mismatch " +
                                a.shape_str() + " vs " + b.shape_str());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a.values()[i] - b.values()[i]));
  }
  return m;
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("solve_linear: A must be square, got " +
                                a.shape_str());
  }
  if (b.rows() != a.rows()) {
    throw std::invalid_argument("solve_linear: rhs rows mismatch");
  }
  const std::size_t n = a.rows();
  const std::size_t k = b.cols();
  Matrix lu = a;
  Matrix x = b;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(lu(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-14) {
      throw std::runtime_error("solve_linear: singular matrix");
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(col, j), lu(pivot, j));
      for (std::size_t j = 0; j < k; ++j) std::swap(x(col, j), x(pivot, j));
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu(r, col) / lu(col, col);
      lu(r, col) = f;
      for (std::size_t j = col + 1; j < n; ++j) lu(r, j) -= f * lu(col, j);
      for (std::size_t j = 0; j < k; ++j) x(r, j) -= f * x(col, j);
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = x(ri, j);
      for (std::size_t c = ri + 1; c < n; ++c) s -= lu(ri, c) * x(c, j);
      x(ri, j) = s / lu(ri, ri);
    }
  }
  return x;
}

double spectral_radius(const Matrix& a, int iters) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("spectral_radius: matrix must be square");
  }
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += std::fabs(a(i, j)) * v[j];
      w[i] = s;
    }
    double norm = 0.0;
    for (double x : w) norm = std::max(norm, std::fabs(x));
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  return lambda;
}

}  // namespace bfreg
