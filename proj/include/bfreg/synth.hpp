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

#include "bfreg/dataset.hpp"
#include "bfreg/knowledge.hpp"
#include "bfreg/rng.hpp"

namespace bfreg {

/// Desk-scale generator with planted structure: expression is coupled along
/// the generated regulation graph, so connected genes correlate and the
/// discovery protocol has ground truth to recover.
struct SynthSpec {
  std::size_t gene_count = 30;
  double edge_density = 0.1;     // directed edge probability
  std::size_t protein_count = 0;  // 0 = gene level only
  std::size_t pathway_count = 0;  // 0 = no pathway level
  std::size_t pathway_size = 3;
  double ppi_noise = 0.05;   // extra protein edges beyond the mapped image
  double coupling = 0.3;     // beta; spectral_radius(beta * A) must stay < 1
  double noise = 0.05;       // dynamics innovation scale
  double relaxation = 0.5;   // rho in (0, 1]
  double observed_prob = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Random directed gene graph (no self-loops); proteins are the gene
/// graph's image under a many-to-one mapping plus noise edges; pathways are
/// random protein groups. Deterministic per seed.
KnowledgeBase gen_knowledge(const SynthSpec& spec);

/// Linear-Gaussian structural model: x = (I - beta A)^-1 eps with
/// independent standard-normal eps per sample, so connected genes have
/// correlated expression in closed form.
ExpressionDataset gen_expression_static(const KnowledgeBase& kb,
                                        const SynthSpec& spec,
                                        std::size_t samples);

/// Class = argmax of designated pathway activities (mean expression of the
/// genes feeding each of the first `classes` pathways); ties take the
/// lowest class id.
std::vector<int> gen_labels(const KnowledgeBase& kb,
                            const ExpressionDataset& data,
                            std::size_t classes);

/// Relaxation dynamics x_{t+1} = (1-rho) x_t + rho tanh(beta A x_t) + eta.
/// Frame t holds all series at timestamp t; row i is series i throughout.
SeriesDataset gen_timeseries(const KnowledgeBase& kb, const SynthSpec& spec,
                             std::size_t samples, std::size_t horizon);

}  // namespace bfreg
