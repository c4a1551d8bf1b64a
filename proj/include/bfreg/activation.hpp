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

#include "bfreg/autodiff.hpp"

namespace bfreg {

enum class Activation { kIdentity, kTanh, kSigmoid, kLeakyRelu };

/// Parses an activation name; anything outside the closed set is a
/// construction error.
Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

Var apply_activation(Var x, Activation a);

}  // namespace bfreg
