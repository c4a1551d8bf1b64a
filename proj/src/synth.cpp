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

#include "bfreg/synth.hpp"

#include "bfreg/kvfile.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace bfreg {

void SynthSpec::validate() const {
  if (gene_count == 0) throw std::invalid_argument("synth: gene_count = 0");
  if (edge_density < 0.0 || edge_density > 1.0) {
    throw std::invalid_argument("synth: edge_density outside [0,1]");
  }
  if (relaxation <= 0.0 || relaxation > 1.0) {
    throw std::invalid_argument("synth: relaxation outside (0,1]");
  }
  if (protein_count > gene_count) {
    throw std::invalid_argument("synth: more proteins than genes");
  }
  if (pathway_count > 0 && protein_count == 0) {
    throw std::invalid_argument("synth: pathways need a protein level");
  }
  if (pathway_count > 0 && pathway_size > protein_count) {
    throw std::invalid_argument("synth: pathway_size exceeds protein count");
  }
}

KnowledgeBase gen_knowledge(const SynthSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  const std::size_t n = spec.gene_count;

  KnowledgeLevel gene_level;
  gene_level.name = "Gene";
  for (std::size_t i = 0; i < n; ++i) {
    gene_level.nodes.push_back("g" + std::to_string(i + 1));
  }
  gene_level.adjacency = Matrix(n, n);
  Rng grn = root.split("grn");
  for (std::size_t src = 0; src < n; ++src) {
    for (std::size_t tgt = 0; tgt < n; ++tgt) {
      if (src == tgt) continue;
      if (grn.bernoulli(spec.edge_density)) {
        gene_level.adjacency(tgt, src) = 1.0;
      }
    }
  }

  std::vector<KnowledgeLevel> levels{std::move(gene_level)};
  std::vector<Matrix> mappings;
  Matrix incidence;

  if (spec.protein_count > 0) {
    const std::size_t m = spec.protein_count;
    KnowledgeLevel protein_level;
    protein_level.name = "Protein";
    for (std::size_t p = 0; p < m; ++p) {
      protein_level.nodes.push_back("p" + std::to_string(p + 1));
    }
    // contiguous many-to-one fan-in: gene i feeds protein floor(i*m/n)
    Matrix mapping(m, n);
    std::vector<std::size_t> gene_to_protein(n);
    for (std::size_t g = 0; g < n; ++g) {
      const std::size_t p = g * m / n;
      gene_to_protein[g] = p;
      mapping(p, g) = 1.0;
    }
    protein_level.adjacency = Matrix(m, m);
    const Matrix& ag = levels[0].adjacency;
    for (std::size_t tgt = 0; tgt < n; ++tgt) {
      for (std::size_t src = 0; src < n; ++src) {
        if (ag(tgt, src) == 0.0) continue;
        const std::size_t p = gene_to_protein[src];
        const std::size_t q = gene_to_protein[tgt];
        if (p != q) protein_level.adjacency(q, p) = 1.0;
      }
    }
    Rng ppi = root.split("ppi");
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = 0; q < m; ++q) {
        if (p == q) continue;
        if (ppi.bernoulli(spec.ppi_noise)) protein_level.adjacency(q, p) = 1.0;
      }
    }
    levels.push_back(std::move(protein_level));
    mappings.push_back(std::move(mapping));

    if (spec.pathway_count > 0) {
      KnowledgeLevel pathway_level;
      pathway_level.name = "Pathway";
      for (std::size_t e = 0; e < spec.pathway_count; ++e) {
        pathway_level.nodes.push_back("pw" + std::to_string(e + 1));
      }
      pathway_level.adjacency =
          Matrix(spec.pathway_count, spec.pathway_count);
      incidence = Matrix(m, spec.pathway_count);
      Rng pw = root.split("pathways");
      for (std::size_t e = 0; e < spec.pathway_count; ++e) {
        std::set<std::size_t> members;
        while (members.size() < spec.pathway_size) {
          members.insert(pw.index(m));
        }
        for (std::size_t p : members) incidence(p, e) = 1.0;
      }
      Matrix pathway_mapping(spec.pathway_count, m);
      for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t e = 0; e < spec.pathway_count; ++e) {
          pathway_mapping(e, p) = incidence(p, e);
        }
      }
      levels.push_back(std::move(pathway_level));
      mappings.push_back(std::move(pathway_mapping));
    }
  }

  return KnowledgeBase(std::move(levels), std::move(mappings),
                       std::move(incidence));
}

ExpressionDataset gen_expression_static(const KnowledgeBase& kb,
                                        const SynthSpec& spec,
                                        std::size_t samples) {
  spec.validate();
  const Matrix& a = kb.level(0).adjacency;
  const std::size_t n = a.rows();
  const double radius = spec.coupling * spectral_radius(a);
  if (radius >= 1.0) {
    throw std::invalid_argument(
        "gen_expression_static: spectral radius of beta*A is " +
        format_double(radius) + ", must be < 1");
  }
  Matrix system(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      system(i, j) = (i == j ? 1.0 : 0.0) - spec.coupling * a(i, j);
    }
  }
  Rng eps_rng = Rng(spec.seed).split("static");
  Matrix eps(n, samples);
  for (double& v : eps.values()) v = eps_rng.normal();
  Matrix x = solve_linear(system, eps);  // n x samples

  ExpressionDataset ds;
  ds.genes = kb.level(0).nodes;
  ds.values = Matrix(samples, n);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t g = 0; g < n; ++g) ds.values(s, g) = x(g, s);
  }
  Rng mask_rng = Rng(spec.seed).split("mask");
  ds.mask = Matrix(samples, n);
  for (double& v : ds.mask.values()) {
    v = mask_rng.bernoulli(spec.observed_prob) ? 1.0 : 0.0;
  }
  ds.validate();
  return ds;
}

std::vector<int> gen_labels(const KnowledgeBase& kb,
                            const ExpressionDataset& data,
                            std::size_t classes) {
  if (!kb.has_incidence()) {
    throw std::invalid_argument("gen_labels: knowledge base has no pathways");
  }
  const Matrix& incidence = kb.incidence();
  if (classes == 0 || classes > incidence.cols()) {
    throw std::invalid_argument("gen_labels: need one pathway per class");
  }
  const Matrix& gene_to_protein = kb.mapping(0);
  const std::size_t n = data.gene_count();
  // genes feeding each designated pathway via their proteins
  std::vector<std::vector<std::size_t>> class_genes(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t g = 0; g < n; ++g) {
      bool member = false;
      for (std::size_t p = 0; p < gene_to_protein.rows(); ++p) {
        if (gene_to_protein(p, g) != 0.0 && incidence(p, c) != 0.0) {
          member = true;
          break;
        }
      }
      if (member) class_genes[c].push_back(g);
    }
    if (class_genes[c].empty()) {
      throw std::invalid_argument("gen_labels: pathway " + std::to_string(c) +
                                  " has no member genes");
    }
  }
  std::vector<int> labels(data.sample_count());
  for (std::size_t s = 0; s < data.sample_count(); ++s) {
    int best = 0;
    double best_activity = -1e300;
    for (std::size_t c = 0; c < classes; ++c) {
      double activity = 0.0;
      for (std::size_t g : class_genes[c]) activity += data.values(s, g);
      activity /= static_cast<double>(class_genes[c].size());
      if (activity > best_activity) {  // strict: ties keep the lowest id
        best_activity = activity;
        best = static_cast<int>(c);
      }
    }
    labels[s] = best;
  }
  return labels;
}

SeriesDataset gen_timeseries(const KnowledgeBase& kb, const SynthSpec& spec,
                             std::size_t samples, std::size_t horizon) {
  spec.validate();
  const Matrix& a = kb.level(0).adjacency;
  const std::size_t n = a.rows();
  Rng rng = Rng(spec.seed).split("series");
  SeriesDataset ds;
  ds.genes = kb.level(0).nodes;
  Matrix state(samples, n);
  for (double& v : state.values()) v = rng.normal();
  ds.timestamps.push_back(0.0);
  ds.frames.push_back(state);
  for (std::size_t t = 1; t <= horizon; ++t) {
    Matrix next(samples, n);
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double drive = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (a(i, j) != 0.0) drive += state(s, j);
        }
        next(s, i) = (1.0 - spec.relaxation) * state(s, i) +
                     spec.relaxation * std::tanh(spec.coupling * drive) +
                     spec.noise * rng.normal();
      }
    }
    state = next;
    ds.timestamps.push_back(static_cast<double>(t));
    ds.frames.push_back(state);
  }
  ds.validate();
  return ds;
}

}  // namespace bfreg
