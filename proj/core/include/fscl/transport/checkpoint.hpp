/*
 * Copyright 2026 The fscl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>

#include "fscl/nn/model.hpp"
#include "fscl/nn/params.hpp"

namespace fscl::transport {

struct Checkpoint {
  std::uint32_t round = 0;
  nn::ParamSet params;
};

// "FSCP" | architecture hash u64 BE | GlobalWeights frame.
void save_checkpoint(const std::filesystem::path& path, const nn::ParamSet& params,
                     std::uint32_t round, const nn::ModelConfig& config);

// Rejects files written for a different architecture or tensor layout.
Checkpoint load_checkpoint(const std::filesystem::path& path, const nn::ModelConfig& config);

}  // namespace fscl::transport
