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

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bfreg/matrix.hpp"
#include "bfreg/params.hpp"

namespace bfreg {

// Reverse-mode tape over dense matrices. The primitive set is closed: these
// ops are everything the engine can differentiate, and anything outside it
// fails at construction (there is no dynamic fallback). Values are computed
// eagerly when a node is appended; backward() walks the tape once in reverse.

enum class Op {
  kLeaf,
  kAdd,
  kSub,
  kMul,       // elementwise
  kScale,     // by compile-time constant
  kMatMul,
  kTranspose,
  kHConcat,
  kVConcat,
  kSliceRows,
  kSliceCols,
  kReshape,
  kSigmoid,
  kTanh,
  kLeakyRelu,
  kSqrt,
  kSoftmaxRowSubset,  // softmax over mask!=0 entries per row
  kSumAll,
  kSumRows,
  kSumCols,
  kMaskMul,    // elementwise product with a constant matrix
  kAddRowVec,  // broadcast a 1 x m row over all rows
  kAddColVec,  // broadcast an n x 1 column over all columns
  kMulRowVec,
  kPairwiseConcat,
  kBatchNormTrain,
  kSoftmaxCrossEntropy,
};

class Tape;

/// Cheap handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;

  std::size_t rows() const;
  std::size_t cols() const;
  const Matrix& value() const;
};

struct Node {
  Op op = Op::kLeaf;
  std::array<int, 3> in = {-1, -1, -1};
  int n_in = 0;
  Matrix value;
  Matrix aux0;  // op-specific constant payload (mask, labels, caches)
  Matrix aux1;  // op-specific cache (softmax probs, batch-norm stats)
  double scalar = 0.0;
  std::size_t i0 = 0;
  std::size_t i1 = 0;
  bool needs_grad = false;
  std::string param_name;  // nonempty only for parameter leaves
};

class Tape {
 public:
  /// Constant leaf; gradients never flow into it.
  Var constant(Matrix value);
  /// Trainable leaf tracked under a name. Repeated calls with the same name
  /// return the node created first.
  Var param(const std::string& name, const Matrix& value);
  /// Leaves for a ParamStore entry: trainable entries get gradients, frozen
  /// ones are constants.
  Var param(const ParamStore& store, const std::string& name);

  /// Reverse pass from a 1x1 root. Throws if the root is not scalar.
  void backward(Var root);

  /// Adjoint of a node after backward(); zeros if no path to the root.
  Matrix grad(Var v) const;
  /// Adjoint of a named parameter leaf; zeros in the given shape when the
  /// parameter never entered the graph.
  Matrix grad_of(const std::string& name, std::size_t rows,
                 std::size_t cols) const;

  /// Batch statistics cached by batch_norm_train, for running-stat updates:
  /// row 0 = mean, row 1 = biased variance.
  const Matrix& bn_stats(Var bn_node) const;

  const Node& node(int idx) const { return nodes_[idx]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  friend struct Var;
  friend Var append_op(Tape& t, Node&& n);

  std::vector<Node> nodes_;
  std::vector<Matrix> adjoints_;
  std::map<std::string, int> param_nodes_;

  void accumulate(int idx, const Matrix& g);
  void backward_node(int idx);
};

// Primitive builders. Shape mismatches throw at construction.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var scale(Var a, double c);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var hconcat(Var a, Var b);
Var vconcat(Var a, Var b);
Var slice_rows(Var a, std::size_t r0, std::size_t r1);
Var slice_cols(Var a, std::size_t c0, std::size_t c1);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope = 0.2);
Var sqrt(Var a);
Var softmax_row_subset(Var logits, const Matrix& mask);
Var sum_all(Var a);
Var sum_rows(Var a);
Var sum_cols(Var a);
Var mask_mul(Var a, const Matrix& mask);
Var add_rowvec(Var a, Var row);
Var add_colvec(Var a, Var col);
Var mul_rowvec(Var a, Var row);
Var pairwise_concat(Var h);
Var batch_norm_train(Var x, Var gamma, Var beta, double eps);
/// Mean negative log-likelihood of integer labels under row-wise softmax.
Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);

struct GradResult {
  Matrix value;
  std::map<std::string, Matrix> grads;  // every trainable parameter
};

/// Builds the graph with `build` (pure in the store), runs backward from its
/// root, and returns the scalar value plus a gradient for every trainable
/// parameter (zeros when unused by the graph).
GradResult evaluate_with_gradients(
    const std::function<Var(Tape&, const ParamStore&)>& build,
    const ParamStore& store);

struct FdEntry {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct FdReport {
  std::vector<FdEntry> entries;
  double worst_rel_err = 0.0;
  bool all_pass = true;
};

/// Central-difference check of analytic gradients, entry by entry:
/// (f(p+h) - f(p-h)) / 2h vs the tape's gradient. Relative error uses
/// |fd - an| / max(|fd|, |an|, 1).
FdReport finite_difference_check(
    const std::function<Var(Tape&, const ParamStore&)>& build,
    const ParamStore& store, double h = 1e-5, double tol = 1e-5);

}  // namespace bfreg
