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

#include "fscl/fed/fedavg.hpp"

#include <algorithm>

#include "fscl/error.hpp"

namespace fscl::fed {

nn::ParamSet fedavg_aggregate(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw Error("fedavg_aggregate: no client updates");

  std::vector<const ClientUpdate*> ordered;
  ordered.reserve(updates.size());
  for (const auto& u : updates) ordered.push_back(&u);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  double total = 0.0;
  for (const auto* u : ordered) {
    if (u->n_samples == 0)
      throw Error("fedavg_aggregate: client " + std::to_string(u->client_id) + " has no samples");
    u->weights.require_same_layout(ordered.front()->weights, "fedavg_aggregate");
    total += static_cast<double>(u->n_samples);
  }

  nn::ParamSet out = ordered.front()->weights.zeros_like();
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto& dst = out[t].values;
    for (std::size_t k = 0; k < dst.size(); ++k) {
      double acc = 0.0;
      double lo = ordered.front()->weights[t].values[k];
      double hi = lo;
      for (const auto* u : ordered) {
        const double w = u->weights[t].values[k];
        acc += (static_cast<double>(u->n_samples) / total) * w;
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
      dst[k] = std::clamp(acc, lo, hi);
    }
  }
  return out;
}

}  // namespace fscl::fed
