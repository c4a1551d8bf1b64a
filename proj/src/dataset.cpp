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

#include "bfreg/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bfreg/kvfile.hpp"

namespace fs = std::filesystem;

namespace bfreg {

void ExpressionDataset::validate() const {
  if (!values.same_shape(mask)) {
    throw std::invalid_argument("dataset: mask shape " + mask.shape_str() +
                                " does not match values " +
                                values.shape_str());
  }
  if (genes.size() != values.cols()) {
    throw std::invalid_argument("dataset: gene name count mismatch");
  }
  for (double v : mask.values()) {
    if (v != 0.0 && v != 1.0) {
      throw std::invalid_argument("dataset: mask entries must be binary");
    }
  }
  if (!labels.empty() && labels.size() != values.rows()) {
    throw std::invalid_argument("dataset: label count mismatch");
  }
}

void SeriesDataset::validate() const {
  if (timestamps.size() != frames.size()) {
    throw std::invalid_argument("series: timestamp/frame count mismatch");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw std::invalid_argument(
          "series: timestamps must be strictly increasing");
    }
  }
  for (const Matrix& f : frames) {
    if (f.cols() != genes.size()) {
      throw std::invalid_argument("series: frame gene count mismatch");
    }
    if (!f.all_finite()) {
      throw std::invalid_argument("series: non-finite sample");
    }
  }
}

Split make_split(std::size_t count, double train_frac, double val_frac,
                 Rng& rng) {
  if (train_frac < 0 || val_frac < 0 || train_frac + val_frac > 1.0) {
    throw std::invalid_argument("make_split: bad fractions");
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(
      static_cast<double>(count) * train_frac + 0.5);
  const auto n_val = static_cast<std::size_t>(
      static_cast<double>(count) * val_frac + 0.5);
  Split s;
  for (std::size_t i = 0; i < count; ++i) {
    if (i < n_train) {
      s.train.push_back(idx[i]);
    } else if (i < n_train + n_val) {
      s.val.push_back(idx[i]);
    } else {
      s.test.push_back(idx[i]);
    }
  }
  return s;
}

namespace {

void write_matrix_csv(std::ostream& out, const Matrix& m,
                      const std::vector<std::string>& header,
                      const std::vector<int>* labels) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ",";
    out << header[j];
  }
  if (labels != nullptr) out << ",label";
  out << "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    if (labels != nullptr) out << "," << (*labels)[i];
    out << "\n";
  }
}

struct CsvContent {
  std::vector<std::string> header;
  Matrix values;
  std::vector<int> labels;
};

CsvContent read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty file");
  }
  CsvContent c;
  c.header = split(line, ',');
  bool has_label = !c.header.empty() && c.header.back() == "label";
  if (has_label) c.header.pop_back();
  const std::size_t cols = c.header.size();
  std::vector<double> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != cols + (has_label ? 1 : 0)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(cols) +
                               " columns, got " +
                               std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      try {
        values.push_back(std::stod(cells[j]));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad number '" + cells[j] + "'");
      }
    }
    if (has_label) c.labels.push_back(std::stoi(cells.back()));
  }
  const std::size_t rows = cols == 0 ? 0 : values.size() / cols;
  c.values = Matrix(rows, cols, std::move(values));
  return c;
}

}  // namespace

void save_expression_csv(const std::string& path,
                         const ExpressionDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_matrix_csv(out, data.values, data.genes,
                   data.has_labels() ? &data.labels : nullptr);
}

void save_mask_csv(const std::string& path, const ExpressionDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_matrix_csv(out, data.mask, data.genes, nullptr);
}

ExpressionDataset load_expression_csv(const std::string& path,
                                      const std::string& mask_path) {
  CsvContent c = read_csv(path);
  ExpressionDataset ds;
  ds.genes = std::move(c.header);
  ds.values = std::move(c.values);
  ds.labels = std::move(c.labels);
  if (mask_path.empty()) {
    ds.mask = Matrix::filled(ds.values.rows(), ds.values.cols(), 1.0);
  } else {
    CsvContent m = read_csv(mask_path);
    if (!m.values.same_shape(ds.values)) {
      throw std::runtime_error("mask file '" + mask_path +
                               "' shape does not match '" + path + "'");
    }
    ds.mask = std::move(m.values);
  }
  ds.validate();
  return ds;
}

void save_series(const SeriesDataset& data, const std::string& dir,
                 const std::string& manifest_name) {
  data.validate();
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "timestamps = ";
  for (std::size_t i = 0; i < data.timestamps.size(); ++i) {
    if (i) manifest << ", ";
    manifest << format_double(data.timestamps[i]);
  }
  manifest << "\n";
  for (std::size_t i = 0; i < data.frames.size(); ++i) {
    const std::string file = "frame_" + std::to_string(i) + ".csv";
    std::ofstream out(fs::path(dir) / file);
    write_matrix_csv(out, data.frames[i], data.genes, nullptr);
    manifest << "frame." << i << " = " << file << "\n";
  }
  std::ofstream out(fs::path(dir) / manifest_name);
  out << manifest.str();
}

SeriesDataset load_series(const std::string& manifest_path) {
  const KeyValueFile kv = KeyValueFile::parse_file(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  SeriesDataset ds;
  for (const auto& ts : split(kv.get("timestamps"), ',')) {
    ds.timestamps.push_back(std::stod(ts));
  }
  for (std::size_t i = 0; i < ds.timestamps.size(); ++i) {
    const std::string key = "frame." + std::to_string(i);
    CsvContent c = read_csv((base / kv.get(key)).string());
    if (i == 0) {
      ds.genes = c.header;
    } else if (c.header != ds.genes) {
      throw std::runtime_error(manifest_path + ": frame " +
                               std::to_string(i) +
                               " gene header differs from frame 0");
    }
    ds.frames.push_back(std::move(c.values));
  }
  ds.validate();
  return ds;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(rows[i], j);
  }
  return out;
}

}  // namespace bfreg
