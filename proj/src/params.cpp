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

#include "bfreg/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace bfreg {

void ParamStore::add(const std::string& name, Matrix value, bool trainable) {
  if (items_.count(name) != 0) {
    throw std::invalid_argument("ParamStore: duplicate parameter '" + name +
                                "'");
  }
  items_.emplace(name, Param{std::move(value), trainable});
}

void ParamStore::add_uniform(const std::string& name, std::size_t rows,
                             std::size_t cols, std::size_t fan_in, Rng& rng,
                             bool trainable) {
  if (fan_in == 0) throw std::invalid_argument("ParamStore: fan_in = 0");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  add(name, std::move(m), trainable);
}

bool ParamStore::has(const std::string& name) const {
  return items_.count(name) != 0;
}

Param& ParamStore::at(const std::string& name) {
  auto it = items_.find(name);
  if (it == items_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  }
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  }
  return it->second;
}

const Matrix& ParamStore::value(const std::string& name) const {
  return at(name).value;
}

void ParamStore::set_value(const std::string& name, Matrix value) {
  Param& p = at(name);
  if (!p.value.same_shape(value)) {
    throw std::invalid_argument("ParamStore: shape change for '" + name +
                                "' (" + p.value.shape_str() + " -> " +
                                value.shape_str() + ")");
  }
  p.value = std::move(value);
}

void ParamStore::set_trainable(const std::string& name, bool trainable) {
  at(name).trainable = trainable;
}

void ParamStore::set_trainable_by_prefix(const std::string& prefix,
                                         bool trainable) {
  for (auto& [name, param] : items_) {
    if (name.rfind(prefix, 0) == 0) param.trainable = trainable;
  }
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& [name, _] : items_) out.push_back(name);
  return out;
}

std::uint64_t ParamStore::content_hash(const std::string& prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, param] : items_) {
    if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
    h = fnv1a(name, h);
    const auto& vals = param.value.values();
    const char* bytes = reinterpret_cast<const char*>(vals.data());
    h = fnv1a(std::string_view(bytes, vals.size() * sizeof(double)), h);
  }
  return h;
}

}  // namespace bfreg
