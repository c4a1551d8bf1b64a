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

#include <cstddef>

#include "bfreg/matrix.hpp"

namespace bfreg::kernels {

// Dense compute kernels behind the tape ops. Each kernel has a serial
// reference implementation under kernels::serial and an OpenMP front door
// under kernels:: that splits work by output row. Every output element is
// written by exactly one thread with a fixed-order inner loop, so parallel
// results are bit-identical to the serial reference for any thread count.

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
// softmax over mask!=0 entries of each row; excluded entries become 0.
Matrix row_subset_softmax(const Matrix& logits, const Matrix& mask);
// rows of the result are [h_i, h_j] for every ordered pair (i, j),
// laid out at row index i*n + j.
Matrix pairwise_concat(const Matrix& h);

}  // namespace serial

// Parallel front doors; fall back to the serial path below a grain size.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix row_subset_softmax(const Matrix& logits, const Matrix& mask);
Matrix pairwise_concat(const Matrix& h);

/// Process-wide switch; on by default. Honors BFREG_THREADS when the CLI
/// applies the environment cap.
void set_parallel_enabled(bool enabled);
bool parallel_enabled();

/// Elements below this count always take the serial path.
constexpr std::size_t kParallelGrain = 4096;

}  // namespace bfreg::kernels
