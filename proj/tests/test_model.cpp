#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "bfreg/checkpoint.hpp"
#include "bfreg/model.hpp"
#include "doctest.h"

using namespace bfreg;

namespace {

/// Two genes with edge g1 -> g2, both mapped to one protein.
KnowledgeBase toy_kb() {
  std::vector<KnowledgeLevel> levels(2);
  levels[0].name = "Gene";
  levels[0].nodes = {"g1", "g2"};
  levels[0].adjacency = Matrix(2, 2);
  levels[0].adjacency(1, 0) = 1.0;
  levels[1].name = "Protein";
  levels[1].nodes = {"p1"};
  levels[1].adjacency = Matrix(1, 1);
  std::vector<Matrix> mappings{Matrix(1, 2, {1, 1})};
  return KnowledgeBase(std::move(levels), std::move(mappings), Matrix());
}

KnowledgeBase gene_only_kb(std::size_t n) {
  std::vector<KnowledgeLevel> levels(1);
  levels[0].name = "Gene";
  for (std::size_t i = 0; i < n; ++i) {
    levels[0].nodes.push_back("g" + std::to_string(i + 1));
  }
  levels[0].adjacency = Matrix(n, n);
  return KnowledgeBase(std::move(levels), {}, Matrix());
}

}  // namespace

TEST_CASE("parameter inventories are deterministic in (config, kb)") {
  ModelConfig cfg;
  cfg.variant = Variant::kBasic;
  cfg.embed_dim = 3;
  cfg.head_hidden = {8};
  cfg.head_output = 2;
  Rng r1(1), r2(2), r3(1);
  BFRegModel m1(toy_kb(), cfg, r1);
  BFRegModel m2(toy_kb(), cfg, r2);
  BFRegModel m3(toy_kb(), cfg, r3);
  REQUIRE(m1.params().names() == m2.params().names());
  for (const auto& name : m1.params().names()) {
    CHECK(m1.params().value(name).same_shape(m2.params().value(name)));
    // same seed gives identical values, different seeds differ somewhere
    CHECK(m1.params().value(name) == m3.params().value(name));
  }
  CHECK(m1.params().content_hash() != m2.params().content_hash());
  CHECK(m1.params().content_hash() == m3.params().content_hash());
}

TEST_CASE("config with more levels than the kb is rejected") {
  ModelConfig cfg;
  cfg.levels_included = 3;
  Rng rng(1);
  CHECK_THROWS_AS(BFRegModel(toy_kb(), cfg, rng), std::invalid_argument);
}

TEST_CASE("enhanced variant requires alpha per level") {
  ModelConfig cfg;
  cfg.variant = Variant::kEnhanced;
  cfg.alpha = {};  // missing
  Rng rng(1);
  CHECK_THROWS_AS(BFRegModel(toy_kb(), cfg, rng), std::invalid_argument);
}

TEST_CASE("zero-message collapse: output equals batch-normed embedding") {
  // gene-only, K=1, basic GAT with zero value weights, sum update
  ModelConfig cfg;
  cfg.variant = Variant::kBasic;
  cfg.embed_dim = 2;
  cfg.levels_included = 1;
  Rng rng(4);
  KnowledgeBase kb = gene_only_kb(3);
  BFRegModel model(kb, cfg, rng);
  model.params().set_value("lvl0.att.wv", Matrix(2, 2));

  Matrix x(2, 3, {0.1, -0.4, 0.9, 1.2, 0.0, -0.7});
  Tape tape;
  ForwardResult fwd = model.forward_batch(tape, x, BatchNormMode::kTrain);

  // oracle: embed each sample, stack, batch norm with gamma/beta
  Tape oracle;
  std::vector<Var> rows;
  for (std::size_t b = 0; b < 2; ++b) {
    Matrix col(3, 1);
    for (std::size_t g = 0; g < 3; ++g) col(g, 0) = x(b, g);
    Var h = embed_genes(oracle.constant(col),
                        oracle.constant(model.params().value("emb.w1")),
                        oracle.constant(model.params().value("emb.b1")),
                        oracle.constant(model.params().value("emb.w2")),
                        oracle.constant(model.params().value("emb.b2")));
    rows.push_back(reshape(h, 1, 6));
  }
  Var stacked = vconcat(rows[0], rows[1]);
  Var normed = batch_norm_train(
      stacked, oracle.constant(model.params().value("bn0.gamma")),
      oracle.constant(model.params().value("bn0.beta")), cfg.bn_eps);
  CHECK(max_abs_diff(fwd.features.value(), normed.value()) == 0.0);
}

TEST_CASE("full pipeline scalar oracle on the two-gene toy") {
  ModelConfig cfg;
  cfg.variant = Variant::kBasic;
  cfg.embed_dim = 1;
  Rng rng(7);
  BFRegModel model(toy_kb(), cfg, rng);
  auto& p = model.params();
  // embedding h = tanh(x)
  p.set_value("emb.w1", Matrix(1, 1, {1.0}));
  p.set_value("emb.b1", Matrix(1, 1, {0.0}));
  p.set_value("emb.w2", Matrix(1, 1, {1.0}));
  p.set_value("emb.b2", Matrix(1, 1, {0.0}));
  // gene attention: zero logits -> uniform over the neighborhood; wv = 1
  p.set_value("lvl0.att.wq", Matrix(1, 1, {0.0}));
  p.set_value("lvl0.att.wk", Matrix(1, 1, {0.0}));
  p.set_value("lvl0.att.wv", Matrix(1, 1, {1.0}));
  p.set_value("lvl0.att.a_src", Matrix(1, 1, {0.3}));
  p.set_value("lvl0.att.a_dst", Matrix(1, 1, {0.8}));
  // mapping to the protein: H_p = tanh(0.5 Hg1 - 0.25 Hg2 + 0.1)
  p.set_value("map0.w", Matrix(1, 2, {0.5, -0.25}));
  p.set_value("map0.b", Matrix(1, 1, {0.1}));
  // protein attention transform wv = 2: out = 2 h + h = 3 h
  p.set_value("lvl1.att.wq", Matrix(1, 1, {0.0}));
  p.set_value("lvl1.att.wk", Matrix(1, 1, {0.0}));
  p.set_value("lvl1.att.wv", Matrix(1, 1, {2.0}));
  p.set_value("lvl1.att.a_src", Matrix(1, 1, {0.0}));
  p.set_value("lvl1.att.a_dst", Matrix(1, 1, {0.0}));

  const double x0[2] = {0.4, -0.9};  // sample 0
  const double x1[2] = {1.1, 0.2};   // sample 1
  Matrix x(2, 2, {x0[0], x0[1], x1[0], x1[1]});
  Tape tape;
  ForwardResult fwd = model.forward_batch(tape, x, BatchNormMode::kTrain);

  // ---- scalar oracle ----
  auto gene_stage = [&](const double* xv, double* out) {
    const double h0 = std::tanh(xv[0]);
    const double h1 = std::tanh(xv[1]);
    out[0] = 2.0 * h0;                       // self only
    out[1] = h1 + 0.5 * (h0 + h1);           // uniform over {g1, g2}
  };
  double s0[2], s1[2];
  gene_stage(x0, s0);
  gene_stage(x1, s1);
  auto bn2 = [&](double a, double b, double* na, double* nb) {
    const double mean = (a + b) / 2.0;
    const double var = ((a - mean) * (a - mean) + (b - mean) * (b - mean)) / 2.0;
    const double inv = 1.0 / std::sqrt(var + cfg.bn_eps);
    *na = (a - mean) * inv;
    *nb = (b - mean) * inv;
  };
  double g0[2], g1[2];
  bn2(s0[0], s1[0], &g0[0], &g1[0]);
  bn2(s0[1], s1[1], &g0[1], &g1[1]);
  auto protein_stage = [&](const double* hg) {
    const double hp = std::tanh(0.5 * hg[0] - 0.25 * hg[1] + 0.1);
    return 3.0 * hp;  // wv=2 self attention + residual
  };
  const double p0 = protein_stage(g0);
  const double p1 = protein_stage(g1);
  double f0, f1;
  bn2(p0, p1, &f0, &f1);

  REQUIRE(fwd.features.rows() == 2);
  REQUIRE(fwd.features.cols() == 1);
  CHECK(fwd.features.value()(0, 0) == doctest::Approx(f0).epsilon(1e-12));
  CHECK(fwd.features.value()(1, 0) == doctest::Approx(f1).epsilon(1e-12));
}

TEST_CASE("end-to-end mask invariance of the inter-level weights") {
  // 3 genes feeding 2 proteins partially: mask has zeros to perturb
  std::vector<KnowledgeLevel> levels(2);
  levels[0].name = "Gene";
  levels[0].nodes = {"g1", "g2", "g3"};
  levels[0].adjacency = Matrix(3, 3);
  levels[0].adjacency(1, 0) = 1.0;
  levels[1].name = "Protein";
  levels[1].nodes = {"p1", "p2"};
  levels[1].adjacency = Matrix(2, 2);
  Matrix mapping(2, 3, {1, 1, 0, 0, 0, 1});
  KnowledgeBase kb({levels[0], levels[1]}, {mapping}, Matrix());

  ModelConfig cfg;
  cfg.variant = Variant::kBasic;
  cfg.embed_dim = 2;
  Rng rng(11);
  BFRegModel model(kb, cfg, rng);
  Matrix x(2, 3, {0.3, -0.2, 0.8, -0.5, 0.4, 0.1});

  Tape t1;
  Matrix base = model.forward_batch(t1, x, BatchNormMode::kTrain)
                    .features.value();
  // poke every masked-out weight
  Matrix w = model.params().value("map0.w");
  w(0, 2) += 123.0;
  w(1, 0) -= 77.0;
  w(1, 1) += 5.0;
  model.params().set_value("map0.w", w);
  Tape t2;
  Matrix poked = model.forward_batch(t2, x, BatchNormMode::kTrain)
                     .features.value();
  CHECK(base == poked);
}

TEST_CASE("enhanced model with alpha=0 keeps end-to-end locality") {
  // two disconnected components at the gene level
  KnowledgeBase kb = [] {
    std::vector<KnowledgeLevel> levels(1);
    levels[0].name = "Gene";
    levels[0].nodes = {"g1", "g2", "g3", "g4"};
    levels[0].adjacency = Matrix(4, 4);
    levels[0].adjacency(1, 0) = 1.0;  // g1 -> g2
    levels[0].adjacency(3, 2) = 1.0;  // g3 -> g4
    return KnowledgeBase({levels[0]}, {}, Matrix());
  }();
  ModelConfig cfg;
  cfg.variant = Variant::kEnhanced;
  cfg.embed_dim = 2;
  cfg.alpha = {0.0};
  Rng rng(13);
  BFRegModel model(kb, cfg, rng);

  Matrix x(2, 4, {0.1, 0.2, 0.3, 0.4, -0.1, -0.2, -0.3, -0.4});
  Tape t1;
  ForwardResult f1 = model.forward_batch(t1, x, BatchNormMode::kTrain);
  // changing g3 (outside N(g1) and N(g2)) must not move the pre-BN
  // embeddings of g1/g2
  Matrix x2 = x;
  x2(0, 2) += 3.0;
  x2(1, 2) -= 1.5;
  Tape t2;
  ForwardResult f2 = model.forward_batch(t2, x2, BatchNormMode::kTrain);
  for (std::size_t b = 0; b < 2; ++b) {
    const Matrix& a = f1.level_pre_bn[0][b].value();
    const Matrix& c = f2.level_pre_bn[0][b].value();
    for (std::size_t g = 0; g < 2; ++g) {
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(a(g, j) == c(g, j));
      }
    }
  }
}

TEST_CASE("heads: zero weights give the bias, class permutation permutes") {
  ModelConfig cfg;
  cfg.variant = Variant::kBasic;
  cfg.embed_dim = 1;
  cfg.head_output = 3;
  Rng rng(17);
  BFRegModel model(gene_only_kb(2), cfg, rng);
  model.params().set_value("head.wout", Matrix(3, 2));
  model.params().set_value("head.bout", Matrix(1, 3, {0.5, -1.0, 2.0}));

  Matrix x(2, 2, {0.2, 0.4, -0.6, 0.3});
  Matrix logits = model.predict(x);
  for (std::size_t b = 0; b < 2; ++b) {
    CHECK(logits(b, 0) == 0.5);
    CHECK(logits(b, 1) == -1.0);
    CHECK(logits(b, 2) == 2.0);
  }

  // permuting head rows permutes the logits correspondingly
  Rng rng2(18);
  BFRegModel m2(gene_only_kb(2), cfg, rng2);
  Matrix w = m2.params().value("head.wout");
  Matrix b = m2.params().value("head.bout");
  Matrix logits_orig = m2.predict(x);
  Matrix wp(3, 2), bp(1, 3);
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 3; ++i) {
    bp(0, i) = b(0, perm[i]);
    for (std::size_t j = 0; j < 2; ++j) wp(i, j) = w(perm[i], j);
  }
  m2.params().set_value("head.wout", wp);
  m2.params().set_value("head.bout", bp);
  Matrix logits_perm = m2.predict(x);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(logits_perm(r, i) == logits_orig(r, perm[i]));
    }
  }
}

TEST_CASE("vector head output length follows the config") {
  ModelConfig cfg;
  cfg.variant = Variant::kBasic;
  cfg.embed_dim = 2;
  cfg.head_hidden = {5};
  cfg.head_output = 8;  // n * T = 2 * 4
  Rng rng(19);
  BFRegModel model(gene_only_kb(2), cfg, rng);
  Matrix x(3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  CHECK(model.predict(x).cols() == 8);
  CHECK(model.predict(x).rows() == 3);
}

TEST_CASE("checkpoint round trip and fingerprint rejection") {
  namespace fs = std::filesystem;
  ModelConfig cfg;
  cfg.variant = Variant::kEnhanced;
  cfg.embed_dim = 2;
  cfg.alpha = {0.01, 0.001};
  cfg.head_hidden = {4};
  Rng rng(23);
  BFRegModel model(toy_kb(), cfg, rng);
  // make running stats non-trivial before saving
  Matrix x(2, 2, {0.4, -0.9, 1.1, 0.2});
  Tape t;
  model.forward_batch(t, x, BatchNormMode::kTrain);

  fs::path path = fs::temp_directory_path() / "bfreg_ckpt_test.txt";
  save_checkpoint(path.string(), model);
  BFRegModel back = load_checkpoint(path.string(), toy_kb());
  CHECK(back.params().content_hash() == model.params().content_hash());
  CHECK(back.config().alpha == cfg.alpha);
  CHECK(back.bn_states()[0].running_mean ==
        model.bn_states()[0].running_mean);
  // identical eval predictions
  CHECK(back.predict(x) == model.predict(x));

  KnowledgeBase other = gene_only_kb(2);
  CHECK_THROWS_AS(load_checkpoint(path.string(), other), std::runtime_error);
}

TEST_CASE("perceptron baseline ignores knowledge entirely") {
  ModelConfig cfg;
  cfg.variant = Variant::kPerceptron;
  cfg.head_hidden = {6};
  cfg.head_output = 2;
  Rng rng(29);
  BFRegModel model(gene_only_kb(2), cfg, rng);
  CHECK(model.feature_width() == 2);
  Matrix x(2, 2, {1.0, 2.0, 3.0, 4.0});
  Tape t;
  ForwardResult fwd = model.forward_batch(t, x, BatchNormMode::kTrain);
  CHECK(fwd.features.value() == x);
}
