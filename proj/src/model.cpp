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

#include "bfreg/model.hpp"

#include <cmath>
#include <stdexcept>

#include "bfreg/kvfile.hpp"

namespace bfreg {

Variant variant_from_string(const std::string& s) {
  if (s == "basic") return Variant::kBasic;
  if (s == "enhanced") return Variant::kEnhanced;
  if (s == "perceptron") return Variant::kPerceptron;
  throw std::invalid_argument("unknown model variant '" + s +
                              "' (basic, enhanced, perceptron)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kBasic:
      return "basic";
    case Variant::kEnhanced:
      return "enhanced";
    case Variant::kPerceptron:
      return "perceptron";
  }
  return "basic";
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_entries()
    const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("variant", to_string(variant));
  e.emplace_back("embed_dim", std::to_string(embed_dim));
  e.emplace_back("hops", std::to_string(hops));
  std::string alpha_s;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i) alpha_s += ",";
    alpha_s += format_double(alpha[i]);
  }
  e.emplace_back("alpha", alpha_s);
  e.emplace_back("update", update == UpdateMode::kSum ? "sum" : "concat");
  e.emplace_back("activation", to_string(activation));
  std::string hidden_s;
  for (std::size_t i = 0; i < head_hidden.size(); ++i) {
    if (i) hidden_s += ",";
    hidden_s += std::to_string(head_hidden[i]);
  }
  e.emplace_back("head_hidden", hidden_s);
  e.emplace_back("head_output", std::to_string(head_output));
  e.emplace_back("levels_included", std::to_string(levels_included));
  e.emplace_back("lstm_hidden", std::to_string(lstm_hidden));
  e.emplace_back("leaky_slope", format_double(leaky_slope));
  e.emplace_back("bn_eps", format_double(bn_eps));
  e.emplace_back("bn_momentum", format_double(bn_momentum));
  return e;
}

ModelConfig ModelConfig::from_entries(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  ModelConfig c;
  for (const auto& [key, value] : entries) {
    if (key == "variant") {
      c.variant = variant_from_string(value);
    } else if (key == "embed_dim") {
      c.embed_dim = std::stoul(value);
    } else if (key == "hops") {
      c.hops = std::stoul(value);
    } else if (key == "alpha") {
      c.alpha.clear();
      if (!value.empty()) {
        for (const auto& part : split(value, ',')) {
          c.alpha.push_back(std::stod(part));
        }
      }
    } else if (key == "update") {
      if (value == "sum") {
        c.update = UpdateMode::kSum;
      } else if (value == "concat") {
        c.update = UpdateMode::kConcat;
      } else {
        throw std::invalid_argument("unknown update mode '" + value + "'");
      }
    } else if (key == "activation") {
      c.activation = activation_from_string(value);
    } else if (key == "head_hidden") {
      c.head_hidden.clear();
      if (!value.empty()) {
        for (const auto& part : split(value, ',')) {
          c.head_hidden.push_back(std::stoul(part));
        }
      }
    } else if (key == "head_output") {
      c.head_output = std::stoul(value);
    } else if (key == "levels_included") {
      c.levels_included = std::stoul(value);
    } else if (key == "lstm_hidden") {
      c.lstm_hidden = std::stoul(value);
    } else if (key == "leaky_slope") {
      c.leaky_slope = std::stod(value);
    } else if (key == "bn_eps") {
      c.bn_eps = std::stod(value);
    } else if (key == "bn_momentum") {
      c.bn_momentum = std::stod(value);
    } else {
      throw std::invalid_argument("model config: unknown key '" + key + "'");
    }
  }
  return c;
}

BFRegModel::BFRegModel(KnowledgeBase kb, ModelConfig config, Rng& rng)
    : kb_(std::move(kb)), config_(std::move(config)) {
  if (config_.hops < 1) {
    throw std::invalid_argument("model: hops must be >= 1");
  }
  if (config_.embed_dim < 1) {
    throw std::invalid_argument("model: embed_dim must be >= 1");
  }
  included_ = config_.levels_included == 0 ? kb_.level_count()
                                           : config_.levels_included;
  if (included_ > kb_.level_count()) {
    throw std::invalid_argument(
        "model: config includes " + std::to_string(included_) +
        " levels but the knowledge base has " +
        std::to_string(kb_.level_count()));
  }
  if (config_.variant == Variant::kEnhanced) {
    for (std::size_t l = 0; l < included_; ++l) {
      if (intra_active(l) && l >= config_.alpha.size()) {
        throw std::invalid_argument(
            "model: enhanced variant needs an alpha for level " +
            kb_.level(l).name);
      }
      if (intra_active(l)) {
        const double a = config_.alpha[l];
        if (a < 0.0 || a >= 1.0) {
          throw std::invalid_argument("model: alpha must be in [0,1)");
        }
      }
    }
  }
  build_params(rng);
}

bool BFRegModel::intra_active(std::size_t level) const {
  // the hypergraph aggregates at the boundary into an incidence-bearing
  // last level; that level gets no message passing of its own
  if (kb_.has_incidence() && level == kb_.level_count() - 1) return false;
  return true;
}

bool BFRegModel::hypergraph_active(std::size_t level) const {
  return kb_.has_incidence() && level + 2 == kb_.level_count() &&
         level + 1 < included_;
}

double BFRegModel::level_alpha(std::size_t level) const {
  return config_.alpha.at(level);
}

std::size_t BFRegModel::feature_width() const {
  if (config_.variant == Variant::kPerceptron) return gene_count();
  return kb_.level(included_ - 1).count() * config_.embed_dim;
}

void BFRegModel::build_params(Rng& rng) {
  const std::size_t d = config_.embed_dim;
  auto add = [&](const std::string& name, std::size_t rows, std::size_t cols,
                 std::size_t fan_in) {
    Rng child = rng.split(name);
    params_.add_uniform(name, rows, cols, fan_in, child);
  };
  auto add_zero = [&](const std::string& name, std::size_t rows,
                      std::size_t cols) {
    params_.add(name, Matrix(rows, cols));
  };

  if (config_.variant != Variant::kPerceptron) {
    add("emb.w1", d, 1, 1);
    add_zero("emb.b1", 1, d);
    add("emb.w2", d, d, d);
    add_zero("emb.b2", 1, d);

    for (std::size_t l = 0; l < included_; ++l) {
      const std::string lvl = "lvl" + std::to_string(l);
      if (intra_active(l)) {
        if (config_.variant == Variant::kBasic) {
          add(lvl + ".att.wq", d, d, d);
          add(lvl + ".att.wk", d, d, d);
          add(lvl + ".att.wv", d, d, d);
          add(lvl + ".att.a_src", d, 1, d);
          add(lvl + ".att.a_dst", d, 1, d);
          if (config_.update == UpdateMode::kConcat) {
            add(lvl + ".att.wu", d, 2 * d, 2 * d);
          }
        } else {
          add(lvl + ".scorer.w1", d, 2 * d, 2 * d);
          add_zero(lvl + ".scorer.b1", 1, d);
          add(lvl + ".scorer.w2", 1, d, d);
          add_zero(lvl + ".scorer.b2", 1, 1);
          for (std::size_t k = 0; k < config_.hops; ++k) {
            add(lvl + ".hop" + std::to_string(k) + ".w", d, d, d);
          }
        }
      }
      if (hypergraph_active(l)) {
        for (std::size_t k = 0; k < config_.hops; ++k) {
          add("hg.hop" + std::to_string(k) + ".w", d, d, d);
        }
      }
      if (l + 1 < included_) {
        const std::size_t lower = kb_.level(l).count();
        const std::size_t upper = kb_.level(l + 1).count();
        add("map" + std::to_string(l) + ".w", upper, lower, lower);
        add_zero("map" + std::to_string(l) + ".b", upper, 1);
      }
      const std::size_t features = kb_.level(l).count() * d;
      params_.add("bn" + std::to_string(l) + ".gamma",
                  Matrix::filled(1, features, 1.0));
      add_zero("bn" + std::to_string(l) + ".beta", 1, features);
      bn_states_.push_back(
          BatchNormState::fresh(features, config_.bn_momentum));
    }
  }

  std::size_t in = feature_width();
  for (std::size_t i = 0; i < config_.head_hidden.size(); ++i) {
    const std::size_t out = config_.head_hidden[i];
    add("head.w" + std::to_string(i), out, in, in);
    add_zero("head.b" + std::to_string(i), 1, out);
    in = out;
  }
  add("head.wout", config_.head_output, in, in);
  add_zero("head.bout", 1, config_.head_output);
}

ForwardResult BFRegModel::forward_batch(Tape& tape, const Matrix& x,
                                        BatchNormMode mode) {
  std::vector<Var> cols;
  cols.reserve(x.rows());
  for (std::size_t b = 0; b < x.rows(); ++b) {
    Matrix col(x.cols(), 1);
    for (std::size_t j = 0; j < x.cols(); ++j) col(j, 0) = x(b, j);
    cols.push_back(tape.constant(std::move(col)));
  }
  return forward_batch(tape, cols, mode);
}

ForwardResult BFRegModel::forward_batch(Tape& tape,
                                        const std::vector<Var>& x_cols,
                                        BatchNormMode mode) {
  if (x_cols.empty()) {
    throw std::invalid_argument("forward_batch: empty batch");
  }
  const std::size_t batch = x_cols.size();
  const std::size_t n0 = gene_count();
  for (const Var& x : x_cols) {
    if (x.rows() != n0 || x.cols() != 1) {
      throw std::invalid_argument("forward_batch: sample must be " +
                                  std::to_string(n0) + "x1, got " +
                                  x.value().shape_str());
    }
  }

  ForwardResult result;
  if (config_.variant == Variant::kPerceptron) {
    // knowledge-free baseline: features are the raw expression rows
    Var stacked = transpose(x_cols[0]);
    for (std::size_t b = 1; b < batch; ++b) {
      stacked = vconcat(stacked, transpose(x_cols[b]));
    }
    result.features = stacked;
    return result;
  }

  const std::size_t d = config_.embed_dim;
  Var w1 = tape.param(params_, "emb.w1");
  Var b1 = tape.param(params_, "emb.b1");
  Var w2 = tape.param(params_, "emb.w2");
  Var b2 = tape.param(params_, "emb.b2");
  std::vector<Var> h;
  h.reserve(batch);
  for (const Var& x : x_cols) h.push_back(embed_genes(x, w1, b1, w2, b2));

  for (std::size_t l = 0; l < included_; ++l) {
    const std::string lvl = "lvl" + std::to_string(l);
    const Matrix& adjacency = kb_.level(l).adjacency;
    const std::size_t nl = kb_.level(l).count();

    if (intra_active(l)) {
      if (config_.variant == Variant::kBasic) {
        GatParams gp{tape.param(params_, lvl + ".att.wq"),
                     tape.param(params_, lvl + ".att.wk"),
                     tape.param(params_, lvl + ".att.wv"),
                     tape.param(params_, lvl + ".att.a_src"),
                     tape.param(params_, lvl + ".att.a_dst"),
                     std::nullopt};
        if (config_.update == UpdateMode::kConcat) {
          gp.wu = tape.param(params_, lvl + ".att.wu");
        }
        for (std::size_t k = 0; k < config_.hops; ++k) {
          for (std::size_t b = 0; b < batch; ++b) {
            h[b] = gat_propagate(h[b], adjacency, gp, config_.update,
                                 config_.leaky_slope);
          }
        }
      } else {
        ScorerParams sp{tape.param(params_, lvl + ".scorer.w1"),
                        tape.param(params_, lvl + ".scorer.b1"),
                        tape.param(params_, lvl + ".scorer.w2"),
                        tape.param(params_, lvl + ".scorer.b2")};
        const double alpha = level_alpha(l);
        for (std::size_t k = 0; k < config_.hops; ++k) {
          Var w = tape.param(params_, lvl + ".hop" + std::to_string(k) + ".w");
          for (std::size_t b = 0; b < batch; ++b) {
            // intensities are recomputed from the current embeddings at
            // every hop
            Var omega = edge_intensity(h[b], sp);
            Var a_prime = enhanced_adjacency(omega, adjacency, alpha);
            h[b] = enhanced_propagate(h[b], a_prime, w, config_.activation);
          }
        }
      }
    }
    if (hypergraph_active(l)) {
      for (std::size_t k = 0; k < config_.hops; ++k) {
        Var w = tape.param(params_, "hg.hop" + std::to_string(k) + ".w");
        for (std::size_t b = 0; b < batch; ++b) {
          h[b] = hypergraph_propagate(h[b], kb_.incidence(), w,
                                      config_.activation);
        }
      }
    }

    result.level_pre_bn.push_back(h);

    // batch normalization at the end of the level, statistics across cells
    Var stacked = reshape(h[0], 1, nl * d);
    for (std::size_t b = 1; b < batch; ++b) {
      stacked = vconcat(stacked, reshape(h[b], 1, nl * d));
    }
    Var gamma = tape.param(params_, "bn" + std::to_string(l) + ".gamma");
    Var beta = tape.param(params_, "bn" + std::to_string(l) + ".beta");
    Var normed;
    if (mode == BatchNormMode::kTrain) {
      normed = batch_norm_train(stacked, gamma, beta, config_.bn_eps);
      const Matrix& stats = tape.bn_stats(normed);
      Matrix mean(1, stats.cols());
      Matrix var(1, stats.cols());
      for (std::size_t j = 0; j < stats.cols(); ++j) {
        mean(0, j) = stats(0, j);
        var(0, j) = stats(1, j);
      }
      bn_states_[l].update(mean, var);
    } else {
      const BatchNormState& st = bn_states_[l];
      Matrix neg_mean(1, nl * d);
      Matrix inv_std(1, nl * d);
      for (std::size_t j = 0; j < nl * d; ++j) {
        neg_mean(0, j) = -st.running_mean(0, j);
        inv_std(0, j) = 1.0 / std::sqrt(st.running_var(0, j) + config_.bn_eps);
      }
      Var centered = add_rowvec(stacked, tape.constant(std::move(neg_mean)));
      Var standardized =
          mul_rowvec(centered, tape.constant(std::move(inv_std)));
      normed = add_rowvec(mul_rowvec(standardized, gamma), beta);
    }
    result.level_post_bn.push_back(normed);

    if (l + 1 < included_) {
      const Matrix& mask = kb_.mapping(l);
      Var mw = tape.param(params_, "map" + std::to_string(l) + ".w");
      Var mb = tape.param(params_, "map" + std::to_string(l) + ".b");
      for (std::size_t b = 0; b < batch; ++b) {
        Var row = slice_rows(normed, b, b + 1);
        Var level_h = reshape(row, nl, d);
        h[b] = masked_dense(level_h, mask, mw, mb, config_.activation);
      }
    } else {
      result.features = normed;
    }
  }
  return result;
}

Var BFRegModel::head(Tape& tape, Var features) const {
  Var x = features;
  for (std::size_t i = 0; i < config_.head_hidden.size(); ++i) {
    Var w = tape.param(params_, "head.w" + std::to_string(i));
    Var b = tape.param(params_, "head.b" + std::to_string(i));
    x = tanh(add_rowvec(matmul(x, transpose(w)), b));
  }
  Var w = tape.param(params_, "head.wout");
  Var b = tape.param(params_, "head.bout");
  return add_rowvec(matmul(x, transpose(w)), b);
}

Matrix BFRegModel::predict(const Matrix& x) {
  Tape tape;
  ForwardResult fwd = forward_batch(tape, x, BatchNormMode::kEval);
  return head(tape, fwd.features).value();
}

void BFRegModel::freeze_trunk() {
  for (const auto& name : params_.names()) {
    const bool head_part =
        name.rfind("head.", 0) == 0 || name.rfind("lstm.", 0) == 0;
    params_.set_trainable(name, head_part);
  }
}

std::uint64_t BFRegModel::trunk_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, param] : params_) {
    if (name.rfind("head.", 0) == 0 || name.rfind("lstm.", 0) == 0) continue;
    h = fnv1a(name, h);
    const char* bytes =
        reinterpret_cast<const char*>(param.value.values().data());
    h = fnv1a(std::string_view(bytes, param.value.size() * sizeof(double)), h);
  }
  return h;
}

}  // namespace bfreg
