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

#include "fscl/nn/adamw.hpp"

#include <cmath>

namespace fscl::nn {

OptimizerState OptimizerState::for_params(const ParamSet& params) {
  OptimizerState s;
  for (const auto& t : params) {
    s.m.emplace_back(t.numel(), 0.0);
    s.v.emplace_back(t.numel(), 0.0);
  }
  return s;
}

void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state,
                const ModelConfig& config) {
  params.require_same_layout(grads, "adamw_step");
  if (state.m.size() != params.size()) state = OptimizerState::for_params(params);

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(config.adam_beta2, t);
  const double lr = config.learning_rate;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (p.kind == ParamKind::Buffer) continue;
    const auto& g = grads[i].values;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const double decay = p.kind == ParamKind::Weight ? config.weight_decay : 0.0;
    for (std::size_t k = 0; k < p.numel(); ++k) {
      m[k] = config.adam_beta1 * m[k] + (1.0 - config.adam_beta1) * g[k];
      v[k] = config.adam_beta2 * v[k] + (1.0 - config.adam_beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p.values[k] -= lr * (m_hat / (std::sqrt(v_hat) + config.adam_epsilon) + decay * p.values[k]);
    }
  }
}

}  // namespace fscl::nn
