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

#include <string>
#include <vector>

#include "bfreg/batchnorm.hpp"
#include "bfreg/knowledge.hpp"
#include "bfreg/layers.hpp"
#include "bfreg/params.hpp"
#include "bfreg/rng.hpp"

namespace bfreg {

enum class Variant {
  kBasic,       // existing knowledge edges only, attention propagation
  kEnhanced,    // learnable edge intensities, non-edges damped by alpha
  kPerceptron,  // knowledge-free baseline: plain MLP on the raw vector
};

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct ModelConfig {
  Variant variant = Variant::kBasic;
  std::size_t embed_dim = 4;  // d
  std::size_t hops = 1;       // K
  std::vector<double> alpha;  // per level, enhanced variant
  UpdateMode update = UpdateMode::kSum;
  Activation activation = Activation::kTanh;
  std::vector<std::size_t> head_hidden;
  std::size_t head_output = 1;
  /// Number of knowledge levels to include, 0 = all.
  std::size_t levels_included = 0;
  std::size_t lstm_hidden = 32;
  double leaky_slope = 0.2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;

  std::vector<std::pair<std::string, std::string>> to_entries() const;
  static ModelConfig from_entries(
      const std::vector<std::pair<std::string, std::string>>& entries);
};

struct ForwardResult {
  /// Level-end features of the last included level, batch-stacked:
  /// B x (node_count * d). This is what the prediction heads consume.
  Var features;
  /// Per included level, per sample: H^{l,K} before batch normalization
  /// (node_count x d). Kept for inspection and for the edge scorer.
  std::vector<std::vector<Var>> level_pre_bn;
  /// Per included level: the batch-stacked output after batch norm.
  std::vector<Var> level_post_bn;
};

/// The assembled network: a knowledge base, a config, and every learnable
/// weight addressed by a stable name. Two models built from the same
/// (config, kb) expose identical parameter inventories; the values depend
/// only on the seed.
class BFRegModel {
 public:
  BFRegModel(KnowledgeBase kb, ModelConfig config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  const KnowledgeBase& kb() const { return kb_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  std::vector<BatchNormState>& bn_states() { return bn_states_; }

  std::size_t included_levels() const { return included_; }
  std::size_t gene_count() const { return kb_.level(0).count(); }
  /// Flattened feature width the heads consume.
  std::size_t feature_width() const;

  /// Multi-level forward pass over a batch of cells (rows of x). Training
  /// mode computes batch-norm statistics across the batch (>= 2 rows) and
  /// folds them into the running state; eval mode uses the running state.
  ForwardResult forward_batch(Tape& tape, const Matrix& x, BatchNormMode mode);
  /// Same, but from column-vector nodes already on the tape (used by the
  /// recurrent backbone to feed predictions back in).
  ForwardResult forward_batch(Tape& tape, const std::vector<Var>& x_cols,
                              BatchNormMode mode);

  /// Prediction head: flattened final embeddings through the MLP. Output
  /// width is config().head_output (class logits or regression values).
  Var head(Tape& tape, Var features) const;

  /// Gradient-free convenience: eval-mode forward + head for a batch.
  Matrix predict(const Matrix& x);

  /// Freezes everything except the prediction head (and, when present, the
  /// recurrent cell); supports the pretrain/fine-tune protocol.
  void freeze_trunk();
  /// Parameters outside the head/recurrent prefixes, hashed bit-exactly.
  std::uint64_t trunk_hash() const;

 private:
  void build_params(Rng& rng);
  bool intra_active(std::size_t level) const;
  bool hypergraph_active(std::size_t level) const;
  double level_alpha(std::size_t level) const;

  KnowledgeBase kb_;
  ModelConfig config_;
  std::size_t included_ = 0;
  ParamStore params_;
  std::vector<BatchNormState> bn_states_;
};

}  // namespace bfreg
