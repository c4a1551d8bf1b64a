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

#include <map>
#include <string>

#include "bfreg/matrix.hpp"
#include "bfreg/params.hpp"

namespace bfreg {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias correction. Moments are kept per parameter and
/// materialize lazily on the first step. Frozen parameters are never touched,
/// even when a gradient is supplied for them.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// One update. Every trainable parameter must have a gradient entry
  /// (missing gradient throws); extra entries for frozen parameters are
  /// ignored.
  void step(ParamStore& params, const std::map<std::string, Matrix>& grads);

  long steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace bfreg
