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

#include <optional>

#include "bfreg/activation.hpp"
#include "bfreg/autodiff.hpp"

namespace bfreg {

enum class UpdateMode { kSum, kConcat };

/// Shared two-stage perceptron applied to each gene's scalar expression:
/// row i of the result depends only on x(i, 0).
///   H0 = tanh(x w1^T + b1) w2^T + b2
/// w1: d x 1, b1: 1 x d, w2: d x d, b2: 1 x d.
Var embed_genes(Var x_col, Var w1, Var b1, Var w2, Var b2);

struct GatParams {
  Var wq;  // d x d
  Var wk;  // d x d
  Var wv;  // d x d
  Var a_src;  // d x 1, first half of the attention vector
  Var a_dst;  // d x 1, second half
  std::optional<Var> wu;  // d x 2d, concat update only
};

/// Attention message passing over the in-neighborhood plus self:
///   e_ij = leaky(a_src . (W_q h_i) + a_dst . (W_k h_j)),  j in A(i) u {i}
///   s_i  = sum_j softmax_j(e_ij) W_v h_j
/// sum update returns s_i + h_i, concat update returns W_u [s_i, h_i].
Var gat_propagate(Var h, const Matrix& adjacency, const GatParams& p,
                  UpdateMode mode, double leaky_slope = 0.2);

/// D^-1 R B^-1 R^T with zero-degree rows replaced by identity rows, so
/// nodes outside every hyperedge pass their own transform through.
Matrix hypergraph_operator(const Matrix& incidence);

/// activation(D^-1 R B^-1 R^T H W) over the hyperedge incidence.
Var hypergraph_propagate(Var h, const Matrix& incidence, Var w,
                         Activation act);

/// activation((M o W) H + b 1^T); masked entries of W can never leak into
/// the output. w: m x n, b: m x 1, h: n x d.
Var masked_dense(Var h, const Matrix& mask, Var w, Var b, Activation act);

struct ScorerParams {
  Var w1;  // d x 2d
  Var b1;  // 1 x d
  Var w2;  // 1 x d
  Var b2;  // 1 x 1
};

/// Omega(i, j) = sigmoid(mlp([h_i, h_j])) for every ordered pair; values in
/// (0, 1), not symmetric.
Var edge_intensity(Var h, const ScorerParams& p);

/// Constant reweighting pattern of the enhanced adjacency: 1 on existing
/// edges, alpha on non-edges, 0 on the diagonal (the self term is added
/// structurally by the propagation). Requires 0 <= alpha < 1.
Matrix enhanced_adjacency_pattern(const Matrix& adjacency, double alpha);

/// A' = Omega o pattern(A, alpha).
Var enhanced_adjacency(Var omega, const Matrix& adjacency, double alpha);

/// activation((A' + I) H W); the identity term keeps isolated nodes live.
Var enhanced_propagate(Var h, Var a_prime, Var w, Activation act);

}  // namespace bfreg
