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
#include <span>
#include <vector>

#include "fscl/nn/params.hpp"
#include "fscl/nn/trainer.hpp"

namespace fscl::fed {

struct ClientUpdate {
  std::size_t client_id = 0;
  nn::ParamSet weights;
  std::size_t n_samples = 0;
  std::vector<nn::EpochRecord> local_history;
};

// Sample-weighted mean sum_k (n_k / n) w_k, accumulated in ascending client_id
// order. Each result scalar is clamped to the [min, max] of the client values,
// so identical updates aggregate to themselves exactly.
nn::ParamSet fedavg_aggregate(std::span<const ClientUpdate> updates);

}  // namespace fscl::fed
