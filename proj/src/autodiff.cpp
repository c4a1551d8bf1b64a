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

#include "bfreg/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "bfreg/kernels.hpp"

namespace bfreg {

std::size_t Var::rows() const { return tape->node(idx).value.rows(); }
std::size_t Var::cols() const { return tape->node(idx).value.cols(); }
const Matrix& Var::value() const { return tape->node(idx).value; }

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("tape: " + msg);
}

const Matrix& val(Var v) { return v.tape->node(v.idx).value; }

Tape& common_tape(Var a, Var b) {
  require(a.tape != nullptr && b.tape != nullptr, "unbound Var");
  require(a.tape == b.tape, "operands live on different tapes");
  return *a.tape;
}

}  // namespace

Var append_op(Tape& t, Node&& n);  // defined below, friend of Tape

Var append_op(Tape& t, Node&& n) {
  for (int k = 0; k < n.n_in; ++k) {
    if (t.node(n.in[k]).needs_grad) n.needs_grad = true;
  }
  t.nodes_.push_back(std::move(n));
  return Var{&t, static_cast<int>(t.nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.needs_grad = false;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const std::string& name, const Matrix& value) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.op = Op::kLeaf;
  n.value = value;
  n.needs_grad = true;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  const int idx = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[name] = idx;
  return Var{this, idx};
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  const Param& p = store.at(name);
  if (!p.trainable) return constant(p.value);
  return param(name, p.value);
}

Matrix Tape::grad(Var v) const {
  if (v.idx < static_cast<int>(adjoints_.size()) &&
      !adjoints_[v.idx].empty()) {
    return adjoints_[v.idx];
  }
  const Matrix& value = nodes_[v.idx].value;
  return Matrix(value.rows(), value.cols());
}

Matrix Tape::grad_of(const std::string& name, std::size_t rows,
                     std::size_t cols) const {
  auto it = param_nodes_.find(name);
  if (it == param_nodes_.end()) return Matrix(rows, cols);
  return grad(Var{const_cast<Tape*>(this), it->second});
}

const Matrix& Tape::bn_stats(Var bn_node) const {
  const Node& n = nodes_[bn_node.idx];
  require(n.op == Op::kBatchNormTrain, "bn_stats on a non-batch-norm node");
  return n.aux1;
}

void Tape::accumulate(int idx, const Matrix& g) {
  if (!nodes_[idx].needs_grad) return;
  Matrix& a = adjoints_[idx];
  if (a.empty()) {
    a = g;
  } else {
    a = kernels::add(a, g);
  }
}

// ---------------------------------------------------------------------------
// builders

Var operator+(Var a, Var b) {
  Tape& t = common_tape(a, b);
  Node n;
  n.op = Op::kAdd;
  n.in = {a.idx, b.idx, -1};
  n.n_in = 2;
  n.value = kernels::add(val(a), val(b));
  return append_op(t, std::move(n));
}

Var operator-(Var a, Var b) {
  Tape& t = common_tape(a, b);
  Node n;
  n.op = Op::kSub;
  n.in = {a.idx, b.idx, -1};
  n.n_in = 2;
  n.value = kernels::sub(val(a), val(b));
  return append_op(t, std::move(n));
}

Var operator*(Var a, Var b) {
  Tape& t = common_tape(a, b);
  Node n;
  n.op = Op::kMul;
  n.in = {a.idx, b.idx, -1};
  n.n_in = 2;
  n.value = kernels::hadamard(val(a), val(b));
  return append_op(t, std::move(n));
}

Var scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.scalar = c;
  n.value = kernels::scale(val(a), c);
  return append_op(*a.tape, std::move(n));
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  Node n;
  n.op = Op::kMatMul;
  n.in = {a.idx, b.idx, -1};
  n.n_in = 2;
  n.value = kernels::matmul(val(a), val(b));
  return append_op(t, std::move(n));
}

Var transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.value = kernels::transpose(val(a));
  return append_op(*a.tape, std::move(n));
}

Var hconcat(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require(val(a).rows() == val(b).rows(), "hconcat: row count mismatch");
  const Matrix& ma = val(a);
  const Matrix& mb = val(b);
  Matrix out(ma.rows(), ma.cols() + mb.cols());
  for (std::size_t i = 0; i < ma.rows(); ++i) {
    for (std::size_t j = 0; j < ma.cols(); ++j) out(i, j) = ma(i, j);
    for (std::size_t j = 0; j < mb.cols(); ++j)
      out(i, ma.cols() + j) = mb(i, j);
  }
  Node n;
  n.op = Op::kHConcat;
  n.in = {a.idx, b.idx, -1};
  n.n_in = 2;
  n.value = std::move(out);
  return append_op(t, std::move(n));
}

Var vconcat(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require(val(a).cols() == val(b).cols(), "vconcat: column count mismatch");
  const Matrix& ma = val(a);
  const Matrix& mb = val(b);
  Matrix out(ma.rows() + mb.rows(), ma.cols());
  std::copy(ma.values().begin(), ma.values().end(), out.values().begin());
  std::copy(mb.values().begin(), mb.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(ma.size()));
  Node n;
  n.op = Op::kVConcat;
  n.in = {a.idx, b.idx, -1};
  n.n_in = 2;
  n.value = std::move(out);
  return append_op(t, std::move(n));
}

Var slice_rows(Var a, std::size_t r0, std::size_t r1) {
  const Matrix& m = val(a);
  require(r0 < r1 && r1 <= m.rows(), "slice_rows: bad range");
  Matrix out(r1 - r0, m.cols());
  std::copy(m.values().begin() + static_cast<std::ptrdiff_t>(r0 * m.cols()),
            m.values().begin() + static_cast<std::ptrdiff_t>(r1 * m.cols()),
            out.values().begin());
  Node n;
  n.op = Op::kSliceRows;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.i0 = r0;
  n.i1 = r1;
  n.value = std::move(out);
  return append_op(*a.tape, std::move(n));
}

Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const Matrix& m = val(a);
  require(c0 < c1 && c1 <= m.cols(), "slice_cols: bad range");
  Matrix out(m.rows(), c1 - c0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = m(i, j);
  Node n;
  n.op = Op::kSliceCols;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.i0 = c0;
  n.i1 = c1;
  n.value = std::move(out);
  return append_op(*a.tape, std::move(n));
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Node n;
  n.op = Op::kReshape;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.value = val(a).reshaped(rows, cols);
  return append_op(*a.tape, std::move(n));
}

namespace {

Var unary_elementwise(Var a, Op op, double scalar,
                      const std::function<double(double)>& f) {
  const Matrix& m = val(a);
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i)
    out.values()[i] = f(m.values()[i]);
  Node n;
  n.op = op;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.scalar = scalar;
  n.value = std::move(out);
  return append_op(*a.tape, std::move(n));
}

}  // namespace

Var sigmoid(Var a) {
  return unary_elementwise(a, Op::kSigmoid, 0.0, [](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  });
}

Var tanh(Var a) {
  return unary_elementwise(a, Op::kTanh, 0.0,
                           [](double x) { return std::tanh(x); });
}

Var leaky_relu(Var a, double slope) {
  return unary_elementwise(a, Op::kLeakyRelu, slope, [slope](double x) {
    return x > 0.0 ? x : slope * x;
  });
}

Var sqrt(Var a) {
  const Matrix& m = val(a);
  for (double x : m.values()) {
    require(x >= 0.0, "sqrt: negative input");
  }
  return unary_elementwise(a, Op::kSqrt, 0.0,
                           [](double x) { return std::sqrt(x); });
}

Var softmax_row_subset(Var logits, const Matrix& mask) {
  require(val(logits).same_shape(mask),
          "softmax_row_subset: mask shape mismatch");
  Node n;
  n.op = Op::kSoftmaxRowSubset;
  n.in = {logits.idx, -1, -1};
  n.n_in = 1;
  n.aux0 = mask;
  n.value = kernels::row_subset_softmax(val(logits), mask);
  return append_op(*logits.tape, std::move(n));
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double x : val(a).values()) s += x;
  Node n;
  n.op = Op::kSumAll;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.value = Matrix(1, 1, {s});
  return append_op(*a.tape, std::move(n));
}

Var sum_rows(Var a) {
  const Matrix& m = val(a);
  Matrix out(m.rows(), 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j);
    out(i, 0) = s;
  }
  Node n;
  n.op = Op::kSumRows;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.value = std::move(out);
  return append_op(*a.tape, std::move(n));
}

Var sum_cols(Var a) {
  const Matrix& m = val(a);
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
  Node n;
  n.op = Op::kSumCols;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.value = std::move(out);
  return append_op(*a.tape, std::move(n));
}

Var mask_mul(Var a, const Matrix& mask) {
  require(val(a).same_shape(mask), "mask_mul: mask shape mismatch");
  Node n;
  n.op = Op::kMaskMul;
  n.in = {a.idx, -1, -1};
  n.n_in = 1;
  n.aux0 = mask;
  n.value = kernels::hadamard(val(a), mask);
  return append_op(*a.tape, std::move(n));
}

Var add_rowvec(Var a, Var row) {
  Tape& t = common_tape(a, row);
  require(val(row).rows() == 1 && val(row).cols() == val(a).cols(),
          "add_rowvec: expected 1x" + std::to_string(val(a).cols()));
  const Matrix& m = val(a);
  const Matrix& r = val(row);
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(i, j) = m(i, j) + r(0, j);
  Node n;
  n.op = Op::kAddRowVec;
  n.in = {a.idx, row.idx, -1};
  n.n_in = 2;
  n.value = std::move(out);
  return append_op(t, std::move(n));
}

Var add_colvec(Var a, Var col) {
  Tape& t = common_tape(a, col);
  require(val(col).cols() == 1 && val(col).rows() == val(a).rows(),
          "add_colvec: expected " + std::to_string(val(a).rows()) + "x1");
  const Matrix& m = val(a);
  const Matrix& c = val(col);
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(i, j) = m(i, j) + c(i, 0);
  Node n;
  n.op = Op::kAddColVec;
  n.in = {a.idx, col.idx, -1};
  n.n_in = 2;
  n.value = std::move(out);
  return append_op(t, std::move(n));
}

Var mul_rowvec(Var a, Var row) {
  Tape& t = common_tape(a, row);
  require(val(row).rows() == 1 && val(row).cols() == val(a).cols(),
          "mul_rowvec: expected 1x" + std::to_string(val(a).cols()));
  const Matrix& m = val(a);
  const Matrix& r = val(row);
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(i, j) = m(i, j) * r(0, j);
  Node n;
  n.op = Op::kMulRowVec;
  n.in = {a.idx, row.idx, -1};
  n.n_in = 2;
  n.value = std::move(out);
  return append_op(t, std::move(n));
}

Var pairwise_concat(Var h) {
  Node n;
  n.op = Op::kPairwiseConcat;
  n.in = {h.idx, -1, -1};
  n.n_in = 1;
  n.value = kernels::pairwise_concat(val(h));
  return append_op(*h.tape, std::move(n));
}

Var batch_norm_train(Var x, Var gamma, Var beta, double eps) {
  Tape& t = common_tape(x, gamma);
  common_tape(x, beta);
  const Matrix& m = val(x);
  require(m.rows() >= 2,
          "batch_norm_train: needs at least 2 samples, got " +
              std::to_string(m.rows()));
  const std::size_t f = m.cols();
  require(val(gamma).rows() == 1 && val(gamma).cols() == f,
          "batch_norm_train: gamma must be 1x" + std::to_string(f));
  require(val(beta).rows() == 1 && val(beta).cols() == f,
          "batch_norm_train: beta must be 1x" + std::to_string(f));

  const double inv_b = 1.0 / static_cast<double>(m.rows());
  Matrix stats(2, f);  // row 0 mean, row 1 biased variance
  for (std::size_t j = 0; j < f; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) mu += m(i, j);
    mu *= inv_b;
    double var = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double d = m(i, j) - mu;
      var += d * d;
    }
    var *= inv_b;
    stats(0, j) = mu;
    stats(1, j) = var;
  }
  Matrix xhat(m.rows(), f);
  Matrix inv_std(1, f);
  for (std::size_t j = 0; j < f; ++j) {
    inv_std(0, j) = 1.0 / std::sqrt(stats(1, j) + eps);
  }
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < f; ++j)
      xhat(i, j) = (m(i, j) - stats(0, j)) * inv_std(0, j);
  Matrix out(m.rows(), f);
  const Matrix& g = val(gamma);
  const Matrix& b = val(beta);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < f; ++j)
      out(i, j) = g(0, j) * xhat(i, j) + b(0, j);

  Node n;
  n.op = Op::kBatchNormTrain;
  n.in = {x.idx, gamma.idx, beta.idx};
  n.n_in = 3;
  n.scalar = eps;
  n.aux0 = std::move(xhat);
  n.aux1 = std::move(stats);
  Matrix cache = std::move(inv_std);
  // keep inv_std appended under aux1 as a third row
  Matrix full(3, f);
  for (std::size_t j = 0; j < f; ++j) {
    full(0, j) = n.aux1(0, j);
    full(1, j) = n.aux1(1, j);
    full(2, j) = cache(0, j);
  }
  n.aux1 = std::move(full);
  n.value = std::move(out);
  return append_op(t, std::move(n));
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
  const Matrix& m = val(logits);
  require(labels.size() == m.rows(),
          "softmax_cross_entropy: one label per row required");
  const std::size_t b = m.rows(), c = m.cols();
  Matrix probs(b, c);
  double loss = 0.0;
  Matrix label_mat(b, 1);
  for (std::size_t i = 0; i < b; ++i) {
    const int y = labels[i];
    require(y >= 0 && static_cast<std::size_t>(y) < c,
            "softmax_cross_entropy: label out of range");
    label_mat(i, 0) = y;
    double mx = m(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, m(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs(i, j) = std::exp(m(i, j) - mx);
      denom += probs(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) probs(i, j) /= denom;
    loss += std::log(denom) + mx - m(i, static_cast<std::size_t>(y));
  }
  loss /= static_cast<double>(b);
  Node n;
  n.op = Op::kSoftmaxCrossEntropy;
  n.in = {logits.idx, -1, -1};
  n.n_in = 1;
  n.aux0 = std::move(label_mat);
  n.aux1 = std::move(probs);
  n.value = Matrix(1, 1, {loss});
  return append_op(*logits.tape, std::move(n));
}

// ---------------------------------------------------------------------------
// backward

void Tape::backward(Var root) {
  require(root.tape == this, "backward: root from another tape");
  const Matrix& rv = nodes_[root.idx].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw std::invalid_argument(
        "backward: gradient root must be scalar, got " + rv.shape_str());
  }
  adjoints_.assign(nodes_.size(), Matrix());
  if (!nodes_[root.idx].needs_grad) return;
  adjoints_[root.idx] = Matrix(1, 1, {1.0});
  for (int i = root.idx; i >= 0; --i) {
    if (!nodes_[i].needs_grad || adjoints_[i].empty()) continue;
    backward_node(i);
  }
}

void Tape::backward_node(int idx) {
  const Node& n = nodes_[idx];
  const Matrix& g = adjoints_[idx];
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd:
      accumulate(n.in[0], g);
      accumulate(n.in[1], g);
      break;
    case Op::kSub:
      accumulate(n.in[0], g);
      accumulate(n.in[1], kernels::scale(g, -1.0));
      break;
    case Op::kMul:
      accumulate(n.in[0], kernels::hadamard(g, nodes_[n.in[1]].value));
      accumulate(n.in[1], kernels::hadamard(g, nodes_[n.in[0]].value));
      break;
    case Op::kScale:
      accumulate(n.in[0], kernels::scale(g, n.scalar));
      break;
    case Op::kMatMul:
      accumulate(n.in[0],
                 kernels::matmul(g, kernels::transpose(nodes_[n.in[1]].value)));
      accumulate(n.in[1],
                 kernels::matmul(kernels::transpose(nodes_[n.in[0]].value), g));
      break;
    case Op::kTranspose:
      accumulate(n.in[0], kernels::transpose(g));
      break;
    case Op::kHConcat: {
      const Matrix& a = nodes_[n.in[0]].value;
      const Matrix& b = nodes_[n.in[1]].value;
      Matrix ga(a.rows(), a.cols());
      Matrix gb(b.rows(), b.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) ga(i, j) = g(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j)
          gb(i, j) = g(i, a.cols() + j);
      }
      accumulate(n.in[0], ga);
      accumulate(n.in[1], gb);
      break;
    }
    case Op::kVConcat: {
      const Matrix& a = nodes_[n.in[0]].value;
      const Matrix& b = nodes_[n.in[1]].value;
      Matrix ga(a.rows(), a.cols());
      Matrix gb(b.rows(), b.cols());
      std::copy(g.values().begin(),
                g.values().begin() + static_cast<std::ptrdiff_t>(a.size()),
                ga.values().begin());
      std::copy(g.values().begin() + static_cast<std::ptrdiff_t>(a.size()),
                g.values().end(), gb.values().begin());
      accumulate(n.in[0], ga);
      accumulate(n.in[1], gb);
      break;
    }
    case Op::kSliceRows: {
      const Matrix& a = nodes_[n.in[0]].value;
      Matrix ga(a.rows(), a.cols());
      std::copy(g.values().begin(), g.values().end(),
                ga.values().begin() +
                    static_cast<std::ptrdiff_t>(n.i0 * a.cols()));
      accumulate(n.in[0], ga);
      break;
    }
    case Op::kSliceCols: {
      const Matrix& a = nodes_[n.in[0]].value;
      Matrix ga(a.rows(), a.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          ga(i, n.i0 + j) = g(i, j);
      accumulate(n.in[0], ga);
      break;
    }
    case Op::kReshape: {
      const Matrix& a = nodes_[n.in[0]].value;
      accumulate(n.in[0], g.reshaped(a.rows(), a.cols()));
      break;
    }
    case Op::kSigmoid: {
      const Matrix& y = n.value;
      Matrix gx(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double s = y.values()[i];
        gx.values()[i] = g.values()[i] * s * (1.0 - s);
      }
      accumulate(n.in[0], gx);
      break;
    }
    case Op::kTanh: {
      const Matrix& y = n.value;
      Matrix gx(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double s = y.values()[i];
        gx.values()[i] = g.values()[i] * (1.0 - s * s);
      }
      accumulate(n.in[0], gx);
      break;
    }
    case Op::kLeakyRelu: {
      const Matrix& x = nodes_[n.in[0]].value;
      Matrix gx(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) {
        gx.values()[i] =
            g.values()[i] * (x.values()[i] > 0.0 ? 1.0 : n.scalar);
      }
      accumulate(n.in[0], gx);
      break;
    }
    case Op::kSqrt: {
      const Matrix& y = n.value;
      Matrix gx(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.size(); ++i) {
        // subgradient 0 at the origin keeps matched zero-distance pairs
        // from blowing up the wasserstein backward
        gx.values()[i] =
            y.values()[i] > 0.0 ? g.values()[i] * 0.5 / y.values()[i] : 0.0;
      }
      accumulate(n.in[0], gx);
      break;
    }
    case Op::kSoftmaxRowSubset: {
      const Matrix& y = n.value;
      const Matrix& mask = n.aux0;
      Matrix gx(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) {
          if (mask(i, j) != 0.0) dot += g(i, j) * y(i, j);
        }
        for (std::size_t j = 0; j < y.cols(); ++j) {
          if (mask(i, j) != 0.0) gx(i, j) = y(i, j) * (g(i, j) - dot);
        }
      }
      accumulate(n.in[0], gx);
      break;
    }
    case Op::kSumAll: {
      const Matrix& a = nodes_[n.in[0]].value;
      accumulate(n.in[0], Matrix::filled(a.rows(), a.cols(), g(0, 0)));
      break;
    }
    case Op::kSumRows: {
      const Matrix& a = nodes_[n.in[0]].value;
      Matrix ga(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) ga(i, j) = g(i, 0);
      accumulate(n.in[0], ga);
      break;
    }
    case Op::kSumCols: {
      const Matrix& a = nodes_[n.in[0]].value;
      Matrix ga(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) ga(i, j) = g(0, j);
      accumulate(n.in[0], ga);
      break;
    }
    case Op::kMaskMul:
      accumulate(n.in[0], kernels::hadamard(g, n.aux0));
      break;
    case Op::kAddRowVec: {
      accumulate(n.in[0], g);
      Matrix gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      accumulate(n.in[1], gr);
      break;
    }
    case Op::kAddColVec: {
      accumulate(n.in[0], g);
      Matrix gc(g.rows(), 1);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gc(i, 0) += g(i, j);
      accumulate(n.in[1], gc);
      break;
    }
    case Op::kMulRowVec: {
      const Matrix& a = nodes_[n.in[0]].value;
      const Matrix& r = nodes_[n.in[1]].value;
      Matrix ga(a.rows(), a.cols());
      Matrix gr(1, a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
          ga(i, j) = g(i, j) * r(0, j);
          gr(0, j) += g(i, j) * a(i, j);
        }
      }
      accumulate(n.in[0], ga);
      accumulate(n.in[1], gr);
      break;
    }
    case Op::kPairwiseConcat: {
      const Matrix& h = nodes_[n.in[0]].value;
      const std::size_t nn = h.rows(), d = h.cols();
      Matrix gh(nn, d);
      for (std::size_t i = 0; i < nn; ++i) {
        for (std::size_t j = 0; j < nn; ++j) {
          const std::size_t row = i * nn + j;
          for (std::size_t c = 0; c < d; ++c) {
            gh(i, c) += g(row, c);
            gh(j, c) += g(row, d + c);
          }
        }
      }
      accumulate(n.in[0], gh);
      break;
    }
    case Op::kBatchNormTrain: {
      const Matrix& xhat = n.aux0;
      const Matrix& stats = n.aux1;  // rows: mean, var, inv_std
      const Matrix& gamma = nodes_[n.in[1]].value;
      const std::size_t b = xhat.rows(), f = xhat.cols();
      const double inv_b = 1.0 / static_cast<double>(b);
      Matrix ggamma(1, f);
      Matrix gbeta(1, f);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < f; ++j) {
          ggamma(0, j) += g(i, j) * xhat(i, j);
          gbeta(0, j) += g(i, j);
        }
      }
      Matrix gx(b, f);
      for (std::size_t j = 0; j < f; ++j) {
        const double mean_g = gbeta(0, j) * inv_b;
        const double mean_gx = ggamma(0, j) * inv_b;
        const double k = gamma(0, j) * stats(2, j);
        for (std::size_t i = 0; i < b; ++i) {
          gx(i, j) = k * (g(i, j) - mean_g - xhat(i, j) * mean_gx);
        }
      }
      accumulate(n.in[0], gx);
      accumulate(n.in[1], ggamma);
      accumulate(n.in[2], gbeta);
      break;
    }
    case Op::kSoftmaxCrossEntropy: {
      const Matrix& probs = n.aux1;
      const Matrix& labels = n.aux0;
      const std::size_t b = probs.rows(), c = probs.cols();
      const double scale_g = g(0, 0) / static_cast<double>(b);
      Matrix gx(b, c);
      for (std::size_t i = 0; i < b; ++i) {
        const auto y = static_cast<std::size_t>(labels(i, 0));
        for (std::size_t j = 0; j < c; ++j) {
          gx(i, j) = (probs(i, j) - (j == y ? 1.0 : 0.0)) * scale_g;
        }
      }
      accumulate(n.in[0], gx);
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// gradient helpers

GradResult evaluate_with_gradients(
    const std::function<Var(Tape&, const ParamStore&)>& build,
    const ParamStore& store) {
  Tape tape;
  Var root = build(tape, store);
  tape.backward(root);
  GradResult result;
  result.value = root.value();
  for (const auto& [name, param] : store) {
    if (!param.trainable) continue;
    result.grads[name] =
        tape.grad_of(name, param.value.rows(), param.value.cols());
  }
  return result;
}

FdReport finite_difference_check(
    const std::function<Var(Tape&, const ParamStore&)>& build,
    const ParamStore& store, double h, double tol) {
  if (h <= 0.0) throw std::invalid_argument("finite_difference_check: h <= 0");
  GradResult analytic = evaluate_with_gradients(build, store);
  ParamStore probe = store;
  auto loss_at = [&](void) {
    Tape tape;
    return build(tape, probe).value()(0, 0);
  };
  FdReport report;
  for (const auto& [name, param] : store) {
    if (!param.trainable) continue;
    FdEntry entry;
    entry.name = name;
    const Matrix& an = analytic.grads.at(name);
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      Matrix& pv = probe.at(name).value;
      const double saved = pv.values()[i];
      pv.values()[i] = saved + h;
      const double up = loss_at();
      pv.values()[i] = saved - h;
      const double down = loss_at();
      pv.values()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = an.values()[i];
      const double rel = std::fabs(fd - a) /
                         std::max({std::fabs(fd), std::fabs(a), 1.0});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    entry.pass = entry.max_rel_err < tol;
    report.worst_rel_err = std::max(report.worst_rel_err, entry.max_rel_err);
    report.all_pass = report.all_pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace bfreg
