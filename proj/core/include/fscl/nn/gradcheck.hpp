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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fscl/nn/model.hpp"

namespace fscl::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

// Compares backward() with central finite differences of the Train-mode loss
// for every trainable scalar. Relative error is |a - n| / max(|a|, |n|, 1e-6).
// Dropout must be disabled in `config`.
GradCheckResult gradient_check(const Batch& batch, const ParamSet& params,
                               const ModelConfig& config, double delta = 1e-5);

struct GradCheckCase {
  ModelConfig config;
  std::size_t steps = 0;
  std::size_t batch_size = 0;
  GradCheckResult result;
};

// Runs gradient_check on `n_configs` random tiny models. The first one is
// V=6, W=3, H1=4, H2=3, B=2.
std::vector<GradCheckCase> gradient_check_suite(std::size_t n_configs, std::uint64_t seed,
                                                double delta = 1e-5);

}  // namespace fscl::nn
