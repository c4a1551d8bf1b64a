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

#include "bfreg/batchnorm.hpp"

#include <cmath>
#include <stdexcept>

namespace bfreg {

BatchNormState BatchNormState::fresh(std::size_t features, double momentum) {
  BatchNormState s;
  s.running_mean = Matrix(1, features);
  s.running_var = Matrix::filled(1, features, 1.0);
  s.momentum = momentum;
  return s;
}

void BatchNormState::update(const Matrix& batch_mean,
                            const Matrix& batch_var) {
  for (std::size_t j = 0; j < running_mean.cols(); ++j) {
    running_mean(0, j) =
        momentum * running_mean(0, j) + (1.0 - momentum) * batch_mean(0, j);
    running_var(0, j) =
        momentum * running_var(0, j) + (1.0 - momentum) * batch_var(0, j);
  }
}

Matrix batch_norm(const Matrix& h, const Matrix& gamma, const Matrix& beta,
                  BatchNormMode mode, BatchNormState& state, double eps) {
  const std::size_t f = h.cols();
  if (gamma.rows() != 1 || gamma.cols() != f || beta.rows() != 1 ||
      beta.cols() != f) {
    throw std::invalid_argument("batch_norm: gamma/beta must be 1x" +
                                std::to_string(f));
  }
  if (state.running_mean.cols() != f) {
    throw std::invalid_argument("batch_norm: state feature count mismatch");
  }
  Matrix mean(1, f);
  Matrix var(1, f);
  if (mode == BatchNormMode::kTrain) {
    if (h.rows() < 2) {
      throw std::invalid_argument(
          "batch_norm: training batch needs at least 2 samples (variance "
          "undefined for 1)");
    }
    const double inv_b = 1.0 / static_cast<double>(h.rows());
    for (std::size_t j = 0; j < f; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < h.rows(); ++i) mu += h(i, j);
      mu *= inv_b;
      double v = 0.0;
      for (std::size_t i = 0; i < h.rows(); ++i) {
        const double d = h(i, j) - mu;
        v += d * d;
      }
      mean(0, j) = mu;
      var(0, j) = v * inv_b;
    }
    state.update(mean, var);
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }
  Matrix out(h.rows(), f);
  for (std::size_t j = 0; j < f; ++j) {
    const double inv_std = 1.0 / std::sqrt(var(0, j) + eps);
    for (std::size_t i = 0; i < h.rows(); ++i) {
      out(i, j) = gamma(0, j) * (h(i, j) - mean(0, j)) * inv_std + beta(0, j);
    }
  }
  return out;
}

}  // namespace bfreg
