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

#include "bfreg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace bfreg {

void AdamState::step(ParamStore& params,
                     const std::map<std::string, Matrix>& grads) {
  ++t_;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    Param& p = params.at(name);
    if (!p.trainable) continue;
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw std::invalid_argument("adam_step: missing gradient for '" + name +
                                  "'");
    }
    const Matrix& g = git->second;
    if (!g.same_shape(p.value)) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for '" +
                                  name + "'");
    }
    auto [mit, fresh] = moments_.try_emplace(
        name, Moments{Matrix(g.rows(), g.cols()), Matrix(g.rows(), g.cols())});
    Matrix& m = mit->second.m;
    Matrix& v = mit->second.v;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = g.values()[i];
      m.values()[i] = cfg_.beta1 * m.values()[i] + (1.0 - cfg_.beta1) * gi;
      v.values()[i] = cfg_.beta2 * v.values()[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m.values()[i] / bias1;
      const double vhat = v.values()[i] / bias2;
      p.value.values()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace bfreg
