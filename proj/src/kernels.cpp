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

#include "bfreg/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace bfreg::kernels {

namespace {

std::atomic<bool> g_parallel{true};

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.shape_str() + " vs " + b.shape_str());
  }
}

bool use_parallel(std::size_t elements) {
  return g_parallel.load(std::memory_order_relaxed) &&
         elements >= kParallelGrain;
}

}  // namespace

void set_parallel_enabled(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " +
                                a.shape_str() + " * " + b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "add");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    c.values()[i] = a.values()[i] + b.values()[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "sub");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    c.values()[i] = a.values()[i] - b.values()[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "hadamard");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    c.values()[i] = a.values()[i] * b.values()[i];
  return c;
}

Matrix scale(const Matrix& a, double c) {
  Matrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) r.values()[i] = a.values()[i] * c;
  return r;
}

Matrix row_subset_softmax(const Matrix& logits, const Matrix& mask) {
  check_same_shape(logits, mask, "row_subset_softmax");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double mx = -1e300;
    bool any = false;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        any = true;
        mx = std::max(mx, logits(i, j));
      }
    }
    if (!any) continue;  // empty subset: row stays all-zero
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        const double e = std::exp(logits(i, j) - mx);
        out(i, j) = e;
        denom += e;
      }
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask(i, j) != 0.0) out(i, j) /= denom;
    }
  }
  return out;
}

Matrix pairwise_concat(const Matrix& h) {
  const std::size_t n = h.rows(), d = h.cols();
  Matrix out(n * n, 2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double* row = out.data() + (i * n + j) * 2 * d;
      const double* hi = h.data() + i * d;
      const double* hj = h.data() + j * d;
      for (std::size_t c = 0; c < d; ++c) row[c] = hi[c];
      for (std::size_t c = 0; c < d; ++c) row[d + c] = hj[c];
    }
  }
  return out;
}

}  // namespace serial

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " +
                                a.shape_str() + " * " + b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (!use_parallel(m * n * k)) return serial::matmul(a, b);
  Matrix c(m, n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    const double* arow = a.data() + static_cast<std::size_t>(i) * k;
    double* crow = c.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) { return serial::transpose(a); }

Matrix add(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "add");
  if (!use_parallel(a.size())) return serial::add(a, b);
  Matrix c(a.rows(), a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.size()); ++i)
    c.values()[i] = a.values()[i] + b.values()[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "sub");
  if (!use_parallel(a.size())) return serial::sub(a, b);
  Matrix c(a.rows(), a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.size()); ++i)
    c.values()[i] = a.values()[i] - b.values()[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  check_same_shape(a, b, "hadamard");
  if (!use_parallel(a.size())) return serial::hadamard(a, b);
  Matrix c(a.rows(), a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.size()); ++i)
    c.values()[i] = a.values()[i] * b.values()[i];
  return c;
}

Matrix scale(const Matrix& a, double c) {
  if (!use_parallel(a.size())) return serial::scale(a, c);
  Matrix r(a.rows(), a.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.size()); ++i)
    r.values()[i] = a.values()[i] * c;
  return r;
}

Matrix row_subset_softmax(const Matrix& logits, const Matrix& mask) {
  check_same_shape(logits, mask, "row_subset_softmax");
  if (!use_parallel(logits.size()))
    return serial::row_subset_softmax(logits, mask);
  Matrix out(logits.rows(), logits.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(logits.rows());
       ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double mx = -1e300;
    bool any = false;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        any = true;
        mx = std::max(mx, logits(i, j));
      }
    }
    if (!any) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        const double e = std::exp(logits(i, j) - mx);
        out(i, j) = e;
        denom += e;
      }
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (mask(i, j) != 0.0) out(i, j) /= denom;
    }
  }
  return out;
}

Matrix pairwise_concat(const Matrix& h) {
  const std::size_t n = h.rows(), d = h.cols();
  if (!use_parallel(n * n * 2 * d)) return serial::pairwise_concat(h);
  Matrix out(n * n, 2 * d);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) {
      double* row = out.data() + (i * n + j) * 2 * d;
      const double* hi = h.data() + i * d;
      const double* hj = h.data() + j * d;
      for (std::size_t c = 0; c < d; ++c) row[c] = hi[c];
      for (std::size_t c = 0; c < d; ++c) row[d + c] = hj[c];
    }
  }
  return out;
}

}  // namespace bfreg::kernels
