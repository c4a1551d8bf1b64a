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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfreg/matrix.hpp"

namespace bfreg {

struct Edge {
  std::string source;
  std::string target;
};

/// One biological level: named nodes plus the intra-level regulation
/// matrix. adjacency(i, j) == 1 means node j regulates node i, so row i
/// reads off the in-neighbors of i. The diagonal is zero as stored;
/// self-inclusion is a propagation rule, not data.
struct KnowledgeLevel {
  std::string name;
  std::vector<std::string> nodes;
  Matrix adjacency;  // n x n binary, zero diagonal

  std::size_t count() const { return nodes.size(); }
  std::optional<std::size_t> index_of(const std::string& node) const;
};

/// Layered knowledge defining the network architecture: per-level
/// adjacencies, inter-level mappings and (optionally) pathway incidence.
/// Immutable after load; the mutating operations below return new values.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  KnowledgeBase(std::vector<KnowledgeLevel> levels,
                std::vector<Matrix> mappings, Matrix incidence);

  std::size_t level_count() const { return levels_.size(); }
  const KnowledgeLevel& level(std::size_t i) const { return levels_[i]; }
  const std::vector<KnowledgeLevel>& levels() const { return levels_; }
  std::size_t level_index(const std::string& name) const;

  /// mapping(l): shape count(l+1) x count(l); routes level l into level l+1.
  const Matrix& mapping(std::size_t l) const { return mappings_[l]; }

  bool has_incidence() const { return !incidence_.empty(); }
  /// Pathway incidence over the second-to-last level's nodes:
  /// count(L-2) x count(L-1), entry 1 when the node belongs to the pathway.
  const Matrix& incidence() const { return incidence_; }

  /// Directed edges of a level in (source, target) file orientation,
  /// row-major deterministic order.
  std::vector<Edge> edges(std::size_t level) const;

  /// Content hash over names, adjacency, mappings and incidence.
  std::uint64_t fingerprint() const;

  void validate() const;

 private:
  std::vector<KnowledgeLevel> levels_;
  std::vector<Matrix> mappings_;
  Matrix incidence_;
};

/// Loads a knowledge manifest ("key = value" text):
///   levels = Gene, Protein, Pathway
///   nodes.<Level>  = file        (optional: declares the node universe)
///   edges.<Level>  = file        (optional: "source<TAB>target" lines)
///   mapping.<L1>.<L2> = file     ("lower<TAB>upper" lines)
///   pathway_members = file       ("member<TAB>pathway" lines)
/// Relative paths resolve against the manifest's directory. Without a nodes
/// file, a level's node order is the order of first appearance across its
/// files. With one, unknown names anywhere are errors. The mapping into a
/// pathway level may be omitted; it then defaults to the incidence
/// transpose (each pathway neuron is fed by its member nodes).
KnowledgeBase load_knowledge(const std::string& manifest_path);

/// Writes a KnowledgeBase back out as manifest + node/edge/mapping files.
/// load_knowledge(save_knowledge(kb)) reproduces kb exactly.
void save_knowledge(const KnowledgeBase& kb, const std::string& dir,
                    const std::string& manifest_name = "knowledge.manifest");

/// Keeps only the measured genes at level 0 (in knowledge order), then drops
/// downstream nodes that lose every mapping source, slicing adjacencies,
/// mappings and incidence to match. Pathways left without members are
/// dropped. Errors if no measured gene is known.
KnowledgeBase restrict_to_genes(const KnowledgeBase& kb,
                                const std::vector<std::string>& measured);

/// Zeroes the row and column of `node` in the level's adjacency; shapes and
/// everything else are untouched.
KnowledgeBase remove_node_edges(const KnowledgeBase& kb,
                                const std::string& level_name,
                                const std::string& node);

}  // namespace bfreg
