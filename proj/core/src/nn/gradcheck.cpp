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

#include "fscl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fscl/error.hpp"

namespace fscl::nn {
namespace {

double train_loss(const Batch& batch, const ParamSet& params, const ModelConfig& config) {
  const ForwardResult r = forward(batch, params, config, ForwardOptions{Mode::Train});
  return bce_loss(r.probs, batch.labels);
}

}  // namespace

GradCheckResult gradient_check(const Batch& batch, const ParamSet& params,
                               const ModelConfig& config, double delta) {
  if (config.dropout_rate != 0.0) throw Error("gradient_check: dropout must be disabled");
  const ForwardResult fwd = forward(batch, params, config, ForwardOptions{Mode::Train});
  const ParamSet analytic = backward(fwd.cache, params, config, batch.labels);

  GradCheckResult result;
  ParamSet probe = params;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    Tensor& t = probe[i];
    if (t.kind == ParamKind::Buffer) continue;
    for (std::size_t k = 0; k < t.numel(); ++k) {
      const double saved = t.values[k];
      t.values[k] = saved + delta;
      const double plus = train_loss(batch, probe, config);
      t.values[k] = saved - delta;
      const double minus = train_loss(batch, probe, config);
      t.values[k] = saved;

      const double numeric = (plus - minus) / (2.0 * delta);
      const double a = analytic[i].values[k];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = t.name;
      }
      ++result.checked;
    }
  }
  return result;
}

std::vector<GradCheckCase> gradient_check_suite(std::size_t n_configs, std::uint64_t seed,
                                                double delta) {
  std::vector<GradCheckCase> cases;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> small(2, 5);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t c = 0; c < n_configs; ++c) {
    GradCheckCase gc;
    gc.config.dropout_rate = 0.0;
    if (c == 0) {
      gc.config.input_dim = 6;
      gc.config.gru1_units = 4;
      gc.config.gru2_units = 3;
      gc.config.dense_hidden = 3;
      gc.steps = 3;
      gc.batch_size = 2;
    } else {
      gc.config.input_dim = small(rng) + 2;
      gc.config.gru1_units = small(rng);
      gc.config.gru2_units = small(rng);
      gc.config.dense_hidden = small(rng);
      gc.steps = small(rng) - 1;
      gc.batch_size = small(rng);
    }

    ParamSet params = init_params(gc.config, rng());
    // Move every trainable tensor off its structured init so each path carries signal.
    for (auto& t : params) {
      if (t.kind == ParamKind::Buffer) continue;
      for (double& v : t.values) v += 0.3 * normal(rng);
    }

    Batch batch;
    batch.batch_size = gc.batch_size;
    batch.steps = gc.steps;
    batch.inputs.resize(static_cast<Eigen::Index>(gc.steps * gc.batch_size),
                        static_cast<Eigen::Index>(gc.config.input_dim));
    for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j)
      for (Eigen::Index i = 0; i < batch.inputs.rows(); ++i) batch.inputs(i, j) = normal(rng);
    batch.labels.resize(static_cast<Eigen::Index>(gc.batch_size));
    for (Eigen::Index i = 0; i < batch.labels.size(); ++i) batch.labels(i) = (i % 2 == 0) ? 1.0 : 0.0;

    gc.result = gradient_check(batch, params, gc.config, delta);
    cases.push_back(std::move(gc));
  }
  return cases;
}

}  // namespace fscl::nn
