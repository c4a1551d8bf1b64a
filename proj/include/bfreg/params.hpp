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
#include <map>
#include <string>
#include <vector>

#include "bfreg/matrix.hpp"
#include "bfreg/rng.hpp"

namespace bfreg {

struct Param {
  Matrix value;
  bool trainable = true;
};

/// Named parameter map. Iteration order is the lexicographic name order, so
/// every pass over the store is deterministic.
class ParamStore {
 public:
  void add(const std::string& name, Matrix value, bool trainable = true);
  /// Weight initialized uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  void add_uniform(const std::string& name, std::size_t rows,
                   std::size_t cols, std::size_t fan_in, Rng& rng,
                   bool trainable = true);

  bool has(const std::string& name) const;
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  const Matrix& value(const std::string& name) const;
  void set_value(const std::string& name, Matrix value);
  void set_trainable(const std::string& name, bool trainable);
  /// Marks every parameter whose name starts with `prefix`.
  void set_trainable_by_prefix(const std::string& prefix, bool trainable);

  std::vector<std::string> names() const;
  std::size_t size() const { return items_.size(); }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// Bit-level fingerprint of a subset of parameters (all when no prefix);
  /// backs the freeze contract checks.
  std::uint64_t content_hash(const std::string& prefix = "") const;

 private:
  std::map<std::string, Param> items_;
};

}  // namespace bfreg
