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

#pragma once

#include "bfreg/matrix.hpp"

namespace bfreg {

/// Running statistics for one batch-norm site. Fresh state normalizes with
/// mean 0 / variance 1, i.e. eval before any training step is the plain
/// gamma/beta affine.
struct BatchNormState {
  Matrix running_mean;  // 1 x features
  Matrix running_var;   // 1 x features
  double momentum = 0.9;

  static BatchNormState fresh(std::size_t features, double momentum = 0.9);
  void update(const Matrix& batch_mean, const Matrix& batch_var);
};

enum class BatchNormMode { kTrain, kEval };

/// Per-column standardization followed by the gamma/beta affine. Training
/// mode computes batch statistics (>= 2 rows required) and folds them into
/// the running state; eval mode normalizes with the running statistics.
Matrix batch_norm(const Matrix& h, const Matrix& gamma, const Matrix& beta,
                  BatchNormMode mode, BatchNormState& state,
                  double eps = 1e-5);

}  // namespace bfreg
