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

#include "bfreg/matrix.hpp"
#include "bfreg/rng.hpp"

namespace bfreg {

/// Sample-by-gene expression values with an observation mask (1 = measured)
/// and optional per-sample class labels. Mask-0 entries never enter a loss.
struct ExpressionDataset {
  Matrix values;  // samples x genes
  Matrix mask;    // same shape as values
  std::vector<std::string> genes;
  std::vector<int> labels;  // empty when the task has none

  std::size_t sample_count() const { return values.rows(); }
  std::size_t gene_count() const { return values.cols(); }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

/// One samples-by-genes frame per timestamp. For forecasting, row i is the
/// same series across frames; for trajectory data the rows are unpaired
/// population draws.
struct SeriesDataset {
  std::vector<double> timestamps;
  std::vector<Matrix> frames;
  std::vector<std::string> genes;

  std::size_t frame_count() const { return frames.size(); }
  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Disjoint covering split by shuffled indices (fractions of the total;
/// test takes the remainder).
Split make_split(std::size_t count, double train_frac, double val_frac,
                 Rng& rng);

/// Comma-separated values, header row = gene names; a trailing "label"
/// column carries class ids when present. The mask travels as a separate
/// file of identical shape.
void save_expression_csv(const std::string& path,
                         const ExpressionDataset& data);
void save_mask_csv(const std::string& path, const ExpressionDataset& data);
ExpressionDataset load_expression_csv(const std::string& path,
                                      const std::string& mask_path = "");

/// Series manifest: "timestamps = t0, t1, ..." plus "frame.<i> = file"
/// entries; one csv per timestamp, all sharing the gene header.
void save_series(const SeriesDataset& data, const std::string& dir,
                 const std::string& manifest_name = "series.manifest");
SeriesDataset load_series(const std::string& manifest_path);

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows);

}  // namespace bfreg
