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

#include "bfreg/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bfreg/kvfile.hpp"

namespace bfreg {

namespace {

constexpr const char* kMagic = "bfreg-checkpoint 1";

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << " ";
      out << hex_double(m(i, j));
    }
    out << "\n";
  }
}

Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols,
                   const std::string& what) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::string line;
    if (!std::getline(in, line)) {
      throw std::runtime_error("checkpoint: truncated matrix for " + what);
    }
    std::istringstream row(line);
    for (std::size_t j = 0; j < cols; ++j) {
      std::string token;
      if (!(row >> token)) {
        throw std::runtime_error("checkpoint: short row in " + what);
      }
      m(i, j) = std::strtod(token.c_str(), nullptr);
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const BFRegModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << kMagic << "\n";
  out << "[config]\n";
  for (const auto& [k, v] : model.config().to_entries()) {
    out << k << " = " << v << "\n";
  }
  out << "[kb]\n";
  out << "fingerprint = " << model.kb().fingerprint() << "\n";
  for (const auto& [name, param] : model.params()) {
    out << "[param] " << name << " " << param.value.rows() << " "
        << param.value.cols() << " " << (param.trainable ? 1 : 0) << "\n";
    write_matrix(out, param.value);
  }
  const auto& states = const_cast<BFRegModel&>(model).bn_states();
  for (std::size_t l = 0; l < states.size(); ++l) {
    out << "[bn] " << l << " " << states[l].running_mean.cols() << "\n";
    write_matrix(out, states[l].running_mean);
    write_matrix(out, states[l].running_var);
  }
}

BFRegModel load_checkpoint(const std::string& path, const KnowledgeBase& kb) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw std::runtime_error("checkpoint: bad header in '" + path + "'");
  }
  if (!std::getline(in, line) || line != "[config]") {
    throw std::runtime_error("checkpoint: missing [config] section");
  }
  std::vector<std::pair<std::string, std::string>> config_entries;
  while (std::getline(in, line)) {
    if (line == "[kb]") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("checkpoint: bad config line '" + line + "'");
    }
    config_entries.emplace_back(trim(line.substr(0, eq)),
                                trim(line.substr(eq + 1)));
  }
  ModelConfig config = ModelConfig::from_entries(config_entries);
  if (!std::getline(in, line) || line.rfind("fingerprint =", 0) != 0) {
    throw std::runtime_error("checkpoint: missing kb fingerprint");
  }
  const std::uint64_t fingerprint =
      std::strtoull(trim(line.substr(13)).c_str(), nullptr, 10);
  if (fingerprint != kb.fingerprint()) {
    throw std::runtime_error(
        "checkpoint: knowledge fingerprint mismatch (checkpoint " +
        std::to_string(fingerprint) + ", current " +
        std::to_string(kb.fingerprint()) + ")");
  }

  Rng scratch(0);
  BFRegModel model(kb, config, scratch);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string tag;
    header >> tag;
    if (tag == "[param]") {
      std::string name;
      std::size_t rows = 0, cols = 0;
      int trainable = 1;
      header >> name >> rows >> cols >> trainable;
      Matrix value = read_matrix(in, rows, cols, name);
      model.params().set_value(name, std::move(value));
      model.params().set_trainable(name, trainable != 0);
    } else if (tag == "[bn]") {
      std::size_t idx = 0, cols = 0;
      header >> idx >> cols;
      if (idx >= model.bn_states().size()) {
        throw std::runtime_error("checkpoint: bn index out of range");
      }
      model.bn_states()[idx].running_mean = read_matrix(in, 1, cols, "bn");
      model.bn_states()[idx].running_var = read_matrix(in, 1, cols, "bn");
    } else {
      throw std::runtime_error("checkpoint: unknown section '" + tag + "'");
    }
  }
  return model;
}

}  // namespace bfreg
