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

#include "bfreg/layers.hpp"

#include <stdexcept>

namespace bfreg {

Var embed_genes(Var x_col, Var w1, Var b1, Var w2, Var b2) {
  if (x_col.cols() != 1) {
    throw std::invalid_argument("embed_genes: expected a column vector, got " +
                                x_col.value().shape_str());
  }
  Var hidden = tanh(add_rowvec(matmul(x_col, transpose(w1)), b1));
  return add_rowvec(matmul(hidden, transpose(w2)), b2);
}

Var gat_propagate(Var h, const Matrix& adjacency, const GatParams& p,
                  UpdateMode mode, double leaky_slope) {
  const std::size_t n = h.rows();
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw std::invalid_argument("gat_propagate: adjacency must be " +
                                std::to_string(n) + "x" + std::to_string(n));
  }
  Tape& t = *h.tape;

  Matrix nbr = adjacency;  // in-neighbors of i live on row i; self included
  for (std::size_t i = 0; i < n; ++i) nbr(i, i) = 1.0;

  Var q = matmul(h, transpose(p.wq));
  Var k = matmul(h, transpose(p.wk));
  Var v = matmul(h, transpose(p.wv));
  Var u = matmul(q, p.a_src);  // n x 1
  Var w = matmul(k, p.a_dst);  // n x 1
  Var ones_row = t.constant(Matrix::filled(1, n, 1.0));
  Var ones_col = t.constant(Matrix::filled(n, 1, 1.0));
  Var logits = leaky_relu(
      matmul(u, ones_row) + matmul(ones_col, transpose(w)), leaky_slope);
  Var attention = softmax_row_subset(logits, nbr);
  Var messages = matmul(attention, v);
  if (mode == UpdateMode::kSum) return messages + h;
  if (!p.wu.has_value()) {
    throw std::invalid_argument("gat_propagate: concat update needs wu");
  }
  return matmul(hconcat(messages, h), transpose(*p.wu));
}

Matrix hypergraph_operator(const Matrix& incidence) {
  const std::size_t n = incidence.rows();
  const std::size_t e = incidence.cols();
  std::vector<double> node_degree(n, 0.0);
  std::vector<double> edge_size(e, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < e; ++j) {
      if (incidence(i, j) != 0.0) {
        node_degree[i] += 1.0;
        edge_size[j] += 1.0;
      }
    }
  }
  for (std::size_t j = 0; j < e; ++j) {
    if (edge_size[j] == 0.0) {
      throw std::invalid_argument(
          "hypergraph_operator: empty hyperedge at column " +
          std::to_string(j));
    }
  }
  Matrix op(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (node_degree[i] == 0.0) {
      op(i, i) = 1.0;  // passthrough for nodes outside every hyperedge
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < e; ++c) {
        if (incidence(i, c) != 0.0 && incidence(j, c) != 0.0) {
          s += 1.0 / edge_size[c];
        }
      }
      op(i, j) = s / node_degree[i];
    }
  }
  return op;
}

Var hypergraph_propagate(Var h, const Matrix& incidence, Var w,
                         Activation act) {
  if (incidence.rows() != h.rows()) {
    throw std::invalid_argument(
        "hypergraph_propagate: incidence rows must match node count");
  }
  Tape& t = *h.tape;
  Var op = t.constant(hypergraph_operator(incidence));
  return apply_activation(matmul(matmul(op, h), w), act);
}

Var masked_dense(Var h, const Matrix& mask, Var w, Var b, Activation act) {
  if (!w.value().same_shape(mask)) {
    throw std::invalid_argument("masked_dense: mask is " + mask.shape_str() +
                                ", weights are " + w.value().shape_str());
  }
  if (w.cols() != h.rows()) {
    throw std::invalid_argument("masked_dense: weight cols " +
                                std::to_string(w.cols()) +
                                " must match node count " +
                                std::to_string(h.rows()));
  }
  Var masked = mask_mul(w, mask);
  return apply_activation(add_colvec(matmul(masked, h), b), act);
}

Var edge_intensity(Var h, const ScorerParams& p) {
  const std::size_t n = h.rows();
  Var pairs = pairwise_concat(h);  // n^2 x 2d, row i*n+j = [h_i, h_j]
  Var hidden = tanh(add_rowvec(matmul(pairs, transpose(p.w1)), p.b1));
  Var score = add_rowvec(matmul(hidden, transpose(p.w2)), p.b2);  // n^2 x 1
  return reshape(sigmoid(score), n, n);
}

Matrix enhanced_adjacency_pattern(const Matrix& adjacency, double alpha) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument(
        "enhanced_adjacency: adjacency must be square");
  }
  if (alpha < 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("enhanced_adjacency: alpha must be in [0,1)");
  }
  const std::size_t n = adjacency.rows();
  Matrix pattern(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;  // self handled structurally by +I
      pattern(i, j) = adjacency(i, j) != 0.0 ? 1.0 : alpha;
    }
  }
  return pattern;
}

Var enhanced_adjacency(Var omega, const Matrix& adjacency, double alpha) {
  if (!omega.value().same_shape(adjacency)) {
    throw std::invalid_argument("enhanced_adjacency: omega is " +
                                omega.value().shape_str() +
                                ", adjacency is " + adjacency.shape_str());
  }
  return mask_mul(omega, enhanced_adjacency_pattern(adjacency, alpha));
}

Var enhanced_propagate(Var h, Var a_prime, Var w, Activation act) {
  const std::size_t n = h.rows();
  if (a_prime.rows() != n || a_prime.cols() != n) {
    throw std::invalid_argument("enhanced_propagate: A' must be " +
                                std::to_string(n) + "x" + std::to_string(n));
  }
  Tape& t = *h.tape;
  Var with_self = a_prime + t.constant(Matrix::identity(n));
  return apply_activation(matmul(matmul(with_self, h), w), act);
}

}  // namespace bfreg
