#include <cmath>
#include <stdexcept>

#include "bfreg/activation.hpp"
#include "bfreg/autodiff.hpp"
#include "bfreg/rng.hpp"
#include "doctest.h"

using namespace bfreg;

namespace {

ParamStore store_with(const std::string& name, Matrix m) {
  ParamStore s;
  s.add(name, std::move(m));
  return s;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("identity: f(w)=w at w=2 has value 2 and gradient 1") {
  auto build = [](Tape& t, const ParamStore& s) {
    return t.param(s, "w");
  };
  auto r = evaluate_with_gradients(build, store_with("w", Matrix(1, 1, {2.0})));
  CHECK(r.value(0, 0) == 2.0);
  CHECK(r.grads.at("w")(0, 0) == 1.0);
}

TEST_CASE("square: f(w)=w^2 at w=3 has value 9 and gradient 6") {
  auto build = [](Tape& t, const ParamStore& s) {
    Var w = t.param(s, "w");
    return w * w;
  };
  auto r = evaluate_with_gradients(build, store_with("w", Matrix(1, 1, {3.0})));
  CHECK(r.value(0, 0) == 9.0);
  CHECK(r.grads.at("w")(0, 0) == 6.0);
}

TEST_CASE("constant: gradient of an unused parameter is zero") {
  auto build = [](Tape& t, const ParamStore&) {
    return t.constant(Matrix(1, 1, {5.0}));
  };
  auto r = evaluate_with_gradients(build, store_with("w", Matrix(1, 1, {3.0})));
  CHECK(r.value(0, 0) == 5.0);
  CHECK(r.grads.at("w")(0, 0) == 0.0);
}

TEST_CASE("non-scalar gradient root is rejected") {
  Tape t;
  Var x = t.param("x", Matrix(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("shape mismatches are construction errors") {
  Tape t;
  Var a = t.constant(Matrix(2, 2));
  Var b = t.constant(Matrix(2, 3));
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(a * b, std::invalid_argument);
  CHECK_THROWS_AS(matmul(b, b), std::invalid_argument);
  CHECK_THROWS_AS(vconcat(a, b), std::invalid_argument);
  CHECK_THROWS_AS(slice_rows(a, 1, 5), std::invalid_argument);
}

TEST_CASE("unsupported activation name is a construction error") {
  CHECK_THROWS_AS(activation_from_string("sin"), std::invalid_argument);
}

TEST_CASE("finite differences: hand cases") {
  // f(w) = w^2 at w=3: analytic 6, central difference is exact to ~1e-6
  auto square = [](Tape& t, const ParamStore& s) {
    Var w = t.param(s, "w");
    return w * w;
  };
  FdReport r = finite_difference_check(
      square, store_with("w", Matrix(1, 1, {3.0})), 1e-5, 1e-5);
  CHECK(r.all_pass);
  CHECK(r.worst_rel_err < 1e-6);

  // linear f(w) = w is matched exactly by central differences
  auto linear = [](Tape& t, const ParamStore& s) {
    return t.param(s, "w");
  };
  FdReport rl = finite_difference_check(
      linear, store_with("w", Matrix(1, 1, {1.7})), 1e-3, 1e-5);
  CHECK(rl.all_pass);
}

// Every primitive, checked against central differences through a scalar
// reduction. This is the per-primitive slice of the gradient suite.
TEST_CASE("finite-difference check per primitive") {
  Rng rng(123);

  auto check = [&](const char* what,
                   const std::function<Var(Tape&, const ParamStore&)>& build,
                   const ParamStore& store) {
    FdReport r = finite_difference_check(build, store, 1e-5, 1e-5);
    INFO(what);
    CHECK(r.all_pass);
  };

  ParamStore s;
  s.add("a", random_matrix(3, 4, rng));
  s.add("b", random_matrix(3, 4, rng));
  s.add("m", random_matrix(4, 2, rng));
  s.add("row", random_matrix(1, 4, rng));
  s.add("col", random_matrix(3, 1, rng));

  check("add", [](Tape& t, const ParamStore& p) {
    return sum_all(t.param(p, "a") + t.param(p, "b"));
  }, s);
  check("sub", [](Tape& t, const ParamStore& p) {
    return sum_all(t.param(p, "a") - t.param(p, "b"));
  }, s);
  check("mul", [](Tape& t, const ParamStore& p) {
    return sum_all(t.param(p, "a") * t.param(p, "b"));
  }, s);
  check("scale", [](Tape& t, const ParamStore& p) {
    return sum_all(scale(t.param(p, "a"), -2.5));
  }, s);
  check("matmul", [](Tape& t, const ParamStore& p) {
    return sum_all(matmul(t.param(p, "a"), t.param(p, "m")));
  }, s);
  check("transpose", [](Tape& t, const ParamStore& p) {
    Var at = transpose(t.param(p, "a"));
    return sum_all(at * at);
  }, s);
  check("hconcat", [](Tape& t, const ParamStore& p) {
    Var c = hconcat(t.param(p, "a"), t.param(p, "b"));
    return sum_all(c * c);
  }, s);
  check("vconcat+slice_rows", [](Tape& t, const ParamStore& p) {
    Var c = vconcat(t.param(p, "a"), t.param(p, "b"));
    Var top = slice_rows(c, 1, 4);
    return sum_all(top * top);
  }, s);
  check("slice_cols+reshape", [](Tape& t, const ParamStore& p) {
    Var c = slice_cols(t.param(p, "a"), 1, 3);
    Var r = reshape(c, 2, 3);
    return sum_all(r * r);
  }, s);
  check("sigmoid", [](Tape& t, const ParamStore& p) {
    return sum_all(sigmoid(t.param(p, "a")));
  }, s);
  check("tanh", [](Tape& t, const ParamStore& p) {
    return sum_all(tanh(t.param(p, "a")));
  }, s);
  check("leaky_relu", [](Tape& t, const ParamStore& p) {
    return sum_all(leaky_relu(t.param(p, "a"), 0.2));
  }, s);
  check("sqrt", [](Tape& t, const ParamStore& p) {
    Var sq = t.param(p, "a") * t.param(p, "a");
    Var sh = sq + t.constant(Matrix::filled(3, 4, 0.5));
    return sum_all(sqrt(sh));
  }, s);
  check("sum_rows/sum_cols", [](Tape& t, const ParamStore& p) {
    Var a = t.param(p, "a");
    Var r = sum_rows(a);
    Var c = sum_cols(a);
    return sum_all(r * r) + sum_all(c * c);
  }, s);
  check("mask_mul", [](Tape& t, const ParamStore& p) {
    Matrix mask(3, 4, {1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0});
    return sum_all(mask_mul(t.param(p, "a"), mask));
  }, s);
  check("add_rowvec", [](Tape& t, const ParamStore& p) {
    Var out = add_rowvec(t.param(p, "a"), t.param(p, "row"));
    return sum_all(out * out);
  }, s);
  check("add_colvec", [](Tape& t, const ParamStore& p) {
    Var out = add_colvec(t.param(p, "a"), t.param(p, "col"));
    return sum_all(out * out);
  }, s);
  check("mul_rowvec", [](Tape& t, const ParamStore& p) {
    Var out = mul_rowvec(t.param(p, "a"), t.param(p, "row"));
    return sum_all(out * out);
  }, s);
  check("pairwise_concat", [](Tape& t, const ParamStore& p) {
    Var pc = pairwise_concat(t.param(p, "a"));
    return sum_all(pc * pc);
  }, s);

  ParamStore sm;
  sm.add("logits", random_matrix(4, 4, rng));
  check("softmax_row_subset", [](Tape& t, const ParamStore& p) {
    Matrix mask(4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      mask(i, i) = 1.0;
      mask(i, (i + 1) % 4) = 1.0;
    }
    Var sm_out = softmax_row_subset(t.param(p, "logits"), mask);
    Matrix w(4, 4);
    for (std::size_t i = 0; i < w.size(); ++i)
      w.values()[i] = 0.1 * static_cast<double>(i);
    return sum_all(mask_mul(sm_out, w));
  }, sm);

  ParamStore bn;
  bn.add("x", random_matrix(6, 3, rng));
  bn.add("gamma", random_matrix(1, 3, rng));
  bn.add("beta", random_matrix(1, 3, rng));
  check("batch_norm_train", [](Tape& t, const ParamStore& p) {
    Var y = batch_norm_train(t.param(p, "x"), t.param(p, "gamma"),
                             t.param(p, "beta"), 1e-5);
    return sum_all(y * y);
  }, bn);

  ParamStore ce;
  ce.add("logits", random_matrix(5, 3, rng));
  check("softmax_cross_entropy", [](Tape& t, const ParamStore& p) {
    return softmax_cross_entropy(t.param(p, "logits"), {0, 2, 1, 1, 0});
  }, ce);
}

TEST_CASE("evaluate_with_gradients is deterministic") {
  Rng rng(77);
  ParamStore s;
  s.add("a", random_matrix(4, 4, rng));
  s.add("b", random_matrix(4, 4, rng));
  auto build = [](Tape& t, const ParamStore& p) {
    Var x = matmul(t.param(p, "a"), t.param(p, "b"));
    return sum_all(sigmoid(x));
  };
  auto r1 = evaluate_with_gradients(build, s);
  auto r2 = evaluate_with_gradients(build, s);
  CHECK(r1.value == r2.value);
  CHECK(r1.grads.at("a") == r2.grads.at("a"));
  CHECK(r1.grads.at("b") == r2.grads.at("b"));
}

TEST_CASE("frozen parameters become constants on the tape") {
  ParamStore s;
  s.add("w", Matrix(1, 1, {2.0}));
  s.add("frozen", Matrix(1, 1, {4.0}), /*trainable=*/false);
  auto build = [](Tape& t, const ParamStore& p) {
    return t.param(p, "w") * t.param(p, "frozen");
  };
  auto r = evaluate_with_gradients(build, s);
  CHECK(r.value(0, 0) == 8.0);
  CHECK(r.grads.count("frozen") == 0);
  CHECK(r.grads.at("w")(0, 0) == 4.0);
}
