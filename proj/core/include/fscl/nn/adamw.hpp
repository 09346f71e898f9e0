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
#include <vector>

#include "fscl/nn/model.hpp"
#include "fscl/nn/params.hpp"

namespace fscl::nn {

struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamSet& params);
};

// One AdamW update with bias correction. Decoupled weight decay is applied to
// Weight tensors only; Buffer tensors are left untouched.
void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state,
                const ModelConfig& config);

}  // namespace fscl::nn
