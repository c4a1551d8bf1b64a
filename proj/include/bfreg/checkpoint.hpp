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

#include "bfreg/model.hpp"

namespace bfreg {

/// Text checkpoint: resolved config, knowledge fingerprint, every named
/// parameter and the batch-norm running statistics. Values are written as
/// hex floats, so save/load round-trips bit-exactly.
void save_checkpoint(const std::string& path, const BFRegModel& model);

/// Rebuilds the model against `kb`. Throws when the checkpoint was trained
/// against a knowledge base with a different fingerprint.
BFRegModel load_checkpoint(const std::string& path, const KnowledgeBase& kb);

}  // namespace bfreg
