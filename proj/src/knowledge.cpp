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

#include "bfreg/knowledge.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bfreg/kvfile.hpp"
#include "bfreg/rng.hpp"

namespace fs = std::filesystem;

namespace bfreg {

std::optional<std::size_t> KnowledgeLevel::index_of(
    const std::string& node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == node) return i;
  }
  return std::nullopt;
}

KnowledgeBase::KnowledgeBase(std::vector<KnowledgeLevel> levels,
                             std::vector<Matrix> mappings, Matrix incidence)
    : levels_(std::move(levels)),
      mappings_(std::move(mappings)),
      incidence_(std::move(incidence)) {
  validate();
}

std::size_t KnowledgeBase::level_index(const std::string& name) const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].name == name) return i;
  }
  throw std::invalid_argument("knowledge: unknown level '" + name + "'");
}

std::vector<Edge> KnowledgeBase::edges(std::size_t level) const {
  const KnowledgeLevel& lv = levels_.at(level);
  std::vector<Edge> out;
  // adjacency(target, source) = 1; emit in (source, target) orientation
  for (std::size_t src = 0; src < lv.count(); ++src) {
    for (std::size_t tgt = 0; tgt < lv.count(); ++tgt) {
      if (lv.adjacency(tgt, src) != 0.0) {
        out.push_back({lv.nodes[src], lv.nodes[tgt]});
      }
    }
  }
  return out;
}

std::uint64_t KnowledgeBase::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix_matrix = [&h](const Matrix& m) {
    h = fnv1a(std::to_string(m.rows()) + "x" + std::to_string(m.cols()), h);
    const char* bytes = reinterpret_cast<const char*>(m.values().data());
    h = fnv1a(std::string_view(bytes, m.size() * sizeof(double)), h);
  };
  for (const auto& lv : levels_) {
    h = fnv1a(lv.name, h);
    for (const auto& n : lv.nodes) h = fnv1a(n + "\n", h);
    mix_matrix(lv.adjacency);
  }
  for (const auto& m : mappings_) mix_matrix(m);
  mix_matrix(incidence_);
  return h;
}

void KnowledgeBase::validate() const {
  for (const auto& lv : levels_) {
    const std::size_t n = lv.count();
    if (lv.adjacency.rows() != n || lv.adjacency.cols() != n) {
      throw std::invalid_argument("knowledge: adjacency of level '" +
                                  lv.name + "' is " +
                                  lv.adjacency.shape_str() + ", expected " +
                                  std::to_string(n) + "x" + std::to_string(n));
    }
    std::set<std::string> seen;
    for (const auto& node : lv.nodes) {
      if (!seen.insert(node).second) {
        throw std::invalid_argument("knowledge: duplicate node '" + node +
                                    "' at level '" + lv.name + "'");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (lv.adjacency(i, i) != 0.0) {
        throw std::invalid_argument(
            "knowledge: nonzero diagonal in adjacency of level '" + lv.name +
            "' (self-loops are a propagation rule, not data)");
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double v = lv.adjacency(i, j);
        if (v != 0.0 && v != 1.0) {
          throw std::invalid_argument(
              "knowledge: adjacency entries must be binary at level '" +
              lv.name + "'");
        }
      }
    }
  }
  if (mappings_.size() + 1 != levels_.size() && !levels_.empty()) {
    throw std::invalid_argument("knowledge: expected " +
                                std::to_string(levels_.size() - 1) +
                                " mappings, got " +
                                std::to_string(mappings_.size()));
  }
  for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
    const Matrix& m = mappings_[l];
    if (m.rows() != levels_[l + 1].count() || m.cols() != levels_[l].count()) {
      throw std::invalid_argument(
          "knowledge: mapping " + levels_[l].name + "->" +
          levels_[l + 1].name + " is " + m.shape_str() + ", expected " +
          std::to_string(levels_[l + 1].count()) + "x" +
          std::to_string(levels_[l].count()));
    }
    for (double v : m.values()) {
      if (v != 0.0 && v != 1.0) {
        throw std::invalid_argument("knowledge: mapping entries must be "
                                    "binary");
      }
    }
  }
  if (!incidence_.empty()) {
    if (levels_.size() < 2) {
      throw std::invalid_argument(
          "knowledge: incidence requires at least two levels");
    }
    const std::size_t members = levels_[levels_.size() - 2].count();
    const std::size_t edges = levels_.back().count();
    if (incidence_.rows() != members || incidence_.cols() != edges) {
      throw std::invalid_argument(
          "knowledge: incidence is " + incidence_.shape_str() +
          ", expected " + std::to_string(members) + "x" +
          std::to_string(edges));
    }
    for (std::size_t e = 0; e < edges; ++e) {
      double size = 0.0;
      for (std::size_t i = 0; i < members; ++i) size += incidence_(i, e);
      if (size == 0.0) {
        throw std::invalid_argument("knowledge: hyperedge '" +
                                    levels_.back().nodes[e] +
                                    "' has no members (degree matrix would "
                                    "be singular)");
      }
    }
  }
}

namespace {

struct TsvRow {
  std::string a;
  std::string b;
  int lineno;
};

std::vector<TsvRow> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<TsvRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected two tab-separated names");
    }
    TsvRow row{trim(line.substr(0, tab)), trim(line.substr(tab + 1)), lineno};
    if (row.a.empty() || row.b.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty name");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> read_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

/// Node universe builder: fixed when a nodes file declared it, otherwise
/// grown in first-appearance order.
class NodeUniverse {
 public:
  NodeUniverse(std::string level, bool fixed,
               std::vector<std::string> declared)
      : level_(std::move(level)), fixed_(fixed) {
    for (auto& n : declared) intern(std::move(n));
  }

  std::size_t resolve(const std::string& name, const std::string& file,
                      int lineno) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    if (fixed_) {
      throw std::runtime_error(file + ":" + std::to_string(lineno) +
                               ": unresolved node '" + name + "' at level " +
                               level_);
    }
    return intern(name);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::size_t intern(std::string name) {
    const std::size_t idx = names_.size();
    index_.emplace(name, idx);
    names_.push_back(std::move(name));
    return idx;
  }

  std::string level_;
  bool fixed_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

std::string resolve_path(const fs::path& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path.string();
  return (base_dir / path).string();
}

}  // namespace

KnowledgeBase load_knowledge(const std::string& manifest_path) {
  const KeyValueFile manifest = KeyValueFile::parse_file(manifest_path);
  const fs::path base_dir = fs::path(manifest_path).parent_path();

  const std::vector<std::string> level_names =
      split(manifest.get("levels"), ',');
  if (level_names.empty() || level_names.front().empty()) {
    throw std::runtime_error(manifest_path + ": 'levels' must name at least "
                                             "one level");
  }
  for (const auto& [key, _] : manifest.entries()) {
    if (key == "levels" || key == "pathway_members") continue;
    const auto parts = split(key, '.');
    const bool known =
        (parts.size() == 2 && (parts[0] == "nodes" || parts[0] == "edges")) ||
        (parts.size() == 3 && parts[0] == "mapping");
    if (!known) {
      throw std::runtime_error(manifest_path + ": unknown key '" + key + "'");
    }
  }

  const std::size_t level_count = level_names.size();
  std::vector<NodeUniverse> universes;
  universes.reserve(level_count);
  for (const auto& name : level_names) {
    const std::string key = "nodes." + name;
    if (manifest.has(key)) {
      universes.emplace_back(
          name, true, read_names(resolve_path(base_dir, manifest.get(key))));
    } else {
      universes.emplace_back(name, false, std::vector<std::string>{});
    }
  }

  // collect raw pairs so the universes grow in file order before any
  // matrices are sized
  std::vector<std::vector<TsvRow>> edge_rows(level_count);
  std::vector<std::string> edge_files(level_count);
  for (std::size_t l = 0; l < level_count; ++l) {
    const std::string key = "edges." + level_names[l];
    if (!manifest.has(key)) continue;
    edge_files[l] = resolve_path(base_dir, manifest.get(key));
    edge_rows[l] = read_pairs(edge_files[l]);
    for (const auto& row : edge_rows[l]) {
      universes[l].resolve(row.a, edge_files[l], row.lineno);
      universes[l].resolve(row.b, edge_files[l], row.lineno);
    }
  }
  std::vector<std::vector<TsvRow>> mapping_rows(
      level_count > 0 ? level_count - 1 : 0);
  std::vector<std::string> mapping_files(mapping_rows.size());
  for (std::size_t l = 0; l + 1 < level_count; ++l) {
    const std::string key =
        "mapping." + level_names[l] + "." + level_names[l + 1];
    if (!manifest.has(key)) continue;
    mapping_files[l] = resolve_path(base_dir, manifest.get(key));
    mapping_rows[l] = read_pairs(mapping_files[l]);
    for (const auto& row : mapping_rows[l]) {
      universes[l].resolve(row.a, mapping_files[l], row.lineno);
      universes[l + 1].resolve(row.b, mapping_files[l], row.lineno);
    }
  }
  std::vector<TsvRow> member_rows;
  std::string member_file;
  if (manifest.has("pathway_members")) {
    if (level_count < 2) {
      throw std::runtime_error(manifest_path +
                               ": pathway_members requires two levels");
    }
    member_file = resolve_path(base_dir, manifest.get("pathway_members"));
    member_rows = read_pairs(member_file);
    for (const auto& row : member_rows) {
      universes[level_count - 2].resolve(row.a, member_file, row.lineno);
      universes[level_count - 1].resolve(row.b, member_file, row.lineno);
    }
  }

  // materialize matrices
  std::vector<KnowledgeLevel> levels(level_count);
  for (std::size_t l = 0; l < level_count; ++l) {
    levels[l].name = level_names[l];
    levels[l].nodes = universes[l].names();
    const std::size_t n = levels[l].nodes.size();
    levels[l].adjacency = Matrix(n, n);
    for (const auto& row : edge_rows[l]) {
      const std::size_t src =
          universes[l].resolve(row.a, edge_files[l], row.lineno);
      const std::size_t tgt =
          universes[l].resolve(row.b, edge_files[l], row.lineno);
      if (src == tgt) {
        throw std::runtime_error(edge_files[l] + ":" +
                                 std::to_string(row.lineno) +
                                 ": self-loop on '" + row.a + "'");
      }
      if (levels[l].adjacency(tgt, src) != 0.0) {
        std::cerr << "warning: " << edge_files[l] << ":" << row.lineno
                  << ": duplicate edge " << row.a << " -> " << row.b
                  << " (deduplicated)\n";
      }
      levels[l].adjacency(tgt, src) = 1.0;
    }
  }

  Matrix incidence;
  if (!member_rows.empty() || manifest.has("pathway_members")) {
    incidence = Matrix(levels[level_count - 2].count(),
                       levels[level_count - 1].count());
    for (const auto& row : member_rows) {
      const std::size_t member =
          universes[level_count - 2].resolve(row.a, member_file, row.lineno);
      const std::size_t pathway =
          universes[level_count - 1].resolve(row.b, member_file, row.lineno);
      if (incidence(member, pathway) != 0.0) {
        std::cerr << "warning: " << member_file << ":" << row.lineno
                  << ": duplicate membership " << row.a << " in " << row.b
                  << " (deduplicated)\n";
      }
      incidence(member, pathway) = 1.0;
    }
  }

  std::vector<Matrix> mappings;
  for (std::size_t l = 0; l + 1 < level_count; ++l) {
    Matrix m(levels[l + 1].count(), levels[l].count());
    if (!mapping_files[l].empty()) {
      for (const auto& row : mapping_rows[l]) {
        const std::size_t lower =
            universes[l].resolve(row.a, mapping_files[l], row.lineno);
        const std::size_t upper =
            universes[l + 1].resolve(row.b, mapping_files[l], row.lineno);
        if (m(upper, lower) != 0.0) {
          std::cerr << "warning: " << mapping_files[l] << ":" << row.lineno
                    << ": duplicate mapping " << row.a << " -> " << row.b
                    << " (deduplicated)\n";
        }
        m(upper, lower) = 1.0;
      }
    } else if (l + 2 == level_count && !incidence.empty()) {
      // default: route each pathway neuron from its member nodes
      for (std::size_t i = 0; i < incidence.rows(); ++i) {
        for (std::size_t e = 0; e < incidence.cols(); ++e) {
          m(e, i) = incidence(i, e);
        }
      }
    } else {
      throw std::runtime_error(manifest_path + ": missing key 'mapping." +
                               level_names[l] + "." + level_names[l + 1] +
                               "'");
    }
    mappings.push_back(std::move(m));
  }

  return KnowledgeBase(std::move(levels), std::move(mappings),
                       std::move(incidence));
}

void save_knowledge(const KnowledgeBase& kb, const std::string& dir,
                    const std::string& manifest_name) {
  fs::create_directories(dir);
  const fs::path base(dir);
  std::ostringstream manifest;
  std::string level_list;
  for (std::size_t l = 0; l < kb.level_count(); ++l) {
    if (l) level_list += ", ";
    level_list += kb.level(l).name;
  }
  manifest << "levels = " << level_list << "\n";
  for (std::size_t l = 0; l < kb.level_count(); ++l) {
    const auto& lv = kb.level(l);
    const std::string nodes_file = "nodes_" + lv.name + ".txt";
    {
      std::ofstream out(base / nodes_file);
      for (const auto& n : lv.nodes) out << n << "\n";
    }
    manifest << "nodes." << lv.name << " = " << nodes_file << "\n";
    const std::string edges_file = "edges_" + lv.name + ".tsv";
    {
      std::ofstream out(base / edges_file);
      for (const auto& e : kb.edges(l)) {
        out << e.source << "\t" << e.target << "\n";
      }
    }
    manifest << "edges." << lv.name << " = " << edges_file << "\n";
  }
  for (std::size_t l = 0; l + 1 < kb.level_count(); ++l) {
    const std::string file =
        "mapping_" + kb.level(l).name + "_" + kb.level(l + 1).name + ".tsv";
    std::ofstream out(base / file);
    const Matrix& m = kb.mapping(l);
    for (std::size_t lower = 0; lower < m.cols(); ++lower) {
      for (std::size_t upper = 0; upper < m.rows(); ++upper) {
        if (m(upper, lower) != 0.0) {
          out << kb.level(l).nodes[lower] << "\t"
              << kb.level(l + 1).nodes[upper] << "\n";
        }
      }
    }
    manifest << "mapping." << kb.level(l).name << "." << kb.level(l + 1).name
             << " = " << file << "\n";
  }
  if (kb.has_incidence()) {
    const std::string file = "pathway_members.tsv";
    std::ofstream out(base / file);
    const Matrix& r = kb.incidence();
    const auto& members = kb.level(kb.level_count() - 2).nodes;
    const auto& pathways = kb.level(kb.level_count() - 1).nodes;
    for (std::size_t i = 0; i < r.rows(); ++i) {
      for (std::size_t e = 0; e < r.cols(); ++e) {
        if (r(i, e) != 0.0) out << members[i] << "\t" << pathways[e] << "\n";
      }
    }
    manifest << "pathway_members = " << file << "\n";
  }
  std::ofstream out(base / manifest_name);
  out << manifest.str();
}

namespace {

KnowledgeLevel slice_level(const KnowledgeLevel& lv,
                           const std::vector<std::size_t>& keep) {
  KnowledgeLevel out;
  out.name = lv.name;
  out.nodes.reserve(keep.size());
  for (std::size_t i : keep) out.nodes.push_back(lv.nodes[i]);
  out.adjacency = Matrix(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      out.adjacency(i, j) = lv.adjacency(keep[i], keep[j]);
    }
  }
  return out;
}

}  // namespace

KnowledgeBase restrict_to_genes(const KnowledgeBase& kb,
                                const std::vector<std::string>& measured) {
  if (measured.empty()) {
    throw std::invalid_argument("restrict_to_genes: measured set is empty");
  }
  if (kb.level_count() == 0) return kb;
  std::set<std::string> wanted(measured.begin(), measured.end());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < kb.level(0).count(); ++i) {
    if (wanted.count(kb.level(0).nodes[i]) != 0) keep.push_back(i);
  }
  if (keep.empty()) {
    throw std::invalid_argument(
        "restrict_to_genes: no measured gene appears in the knowledge base");
  }

  std::vector<KnowledgeLevel> levels{slice_level(kb.level(0), keep)};
  std::vector<Matrix> mappings;
  std::vector<std::size_t> lower_keep = keep;
  for (std::size_t l = 0; l + 1 < kb.level_count(); ++l) {
    const Matrix& m = kb.mapping(l);
    // a node survives if it still receives at least one kept source
    std::vector<std::size_t> upper_keep;
    for (std::size_t u = 0; u < m.rows(); ++u) {
      bool reachable = false;
      for (std::size_t low : lower_keep) {
        if (m(u, low) != 0.0) {
          reachable = true;
          break;
        }
      }
      if (reachable) upper_keep.push_back(u);
    }
    Matrix sliced(upper_keep.size(), lower_keep.size());
    for (std::size_t u = 0; u < upper_keep.size(); ++u) {
      for (std::size_t low = 0; low < lower_keep.size(); ++low) {
        sliced(u, low) = m(upper_keep[u], lower_keep[low]);
      }
    }
    mappings.push_back(std::move(sliced));
    levels.push_back(slice_level(kb.level(l + 1), upper_keep));
    lower_keep = std::move(upper_keep);
  }

  Matrix incidence;
  if (kb.has_incidence()) {
    // rebuild over the surviving members and pathways; empty pathways were
    // already dropped by the mapping-reachability rule above when the
    // default mapping mirrors the incidence, but an explicit mapping can
    // disagree, so drop them again here
    const auto& member_level = levels[levels.size() - 2];
    const auto& pathway_level = levels.back();
    const auto& old_members = kb.level(kb.level_count() - 2);
    const auto& old_pathways = kb.level(kb.level_count() - 1);
    std::vector<std::size_t> member_idx;
    for (const auto& n : member_level.nodes) {
      member_idx.push_back(*old_members.index_of(n));
    }
    std::vector<std::size_t> pathway_keep;
    std::vector<std::size_t> pathway_idx;
    for (std::size_t e = 0; e < pathway_level.count(); ++e) {
      const std::size_t old_e = *old_pathways.index_of(pathway_level.nodes[e]);
      bool nonempty = false;
      for (std::size_t i : member_idx) {
        if (kb.incidence()(i, old_e) != 0.0) {
          nonempty = true;
          break;
        }
      }
      if (nonempty) {
        pathway_keep.push_back(e);
        pathway_idx.push_back(old_e);
      }
    }
    if (pathway_keep.size() != pathway_level.count()) {
      levels.back() = slice_level(pathway_level, pathway_keep);
      Matrix& last_mapping = mappings.back();
      Matrix sliced(pathway_keep.size(), last_mapping.cols());
      for (std::size_t e = 0; e < pathway_keep.size(); ++e) {
        for (std::size_t c = 0; c < last_mapping.cols(); ++c) {
          sliced(e, c) = last_mapping(pathway_keep[e], c);
        }
      }
      last_mapping = std::move(sliced);
    }
    incidence = Matrix(member_idx.size(), pathway_idx.size());
    for (std::size_t i = 0; i < member_idx.size(); ++i) {
      for (std::size_t e = 0; e < pathway_idx.size(); ++e) {
        incidence(i, e) = kb.incidence()(member_idx[i], pathway_idx[e]);
      }
    }
  }

  return KnowledgeBase(std::move(levels), std::move(mappings),
                       std::move(incidence));
}

KnowledgeBase remove_node_edges(const KnowledgeBase& kb,
                                const std::string& level_name,
                                const std::string& node) {
  const std::size_t l = kb.level_index(level_name);
  const auto idx = kb.level(l).index_of(node);
  if (!idx) {
    throw std::invalid_argument("remove_node_edges: unknown node '" + node +
                                "' at level '" + level_name + "'");
  }
  std::vector<KnowledgeLevel> levels(kb.levels());
  Matrix& a = levels[l].adjacency;
  for (std::size_t j = 0; j < a.cols(); ++j) a(*idx, j) = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, *idx) = 0.0;
  std::vector<Matrix> mappings;
  for (std::size_t i = 0; i + 1 < kb.level_count(); ++i) {
    mappings.push_back(kb.mapping(i));
  }
  return KnowledgeBase(std::move(levels), std::move(mappings),
                       kb.has_incidence() ? kb.incidence() : Matrix());
}

}  // namespace bfreg
