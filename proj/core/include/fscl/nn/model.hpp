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
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "fscl/features.hpp"
#include "fscl/nn/params.hpp"
#include "fscl/random.hpp"

namespace fscl::nn {

struct ModelConfig {
  std::size_t input_dim = 1000;
  std::size_t gru1_units = 32;
  std::size_t gru2_units = 16;
  std::size_t dense_hidden = 16;
  double dropout_rate = 0.5;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 32;

  void validate() const;
  // Fingerprint of the tensor layout; checkpoints from another layout are rejected.
  std::uint64_t architecture_hash() const noexcept;
};

// GRU1(return sequences) -> GRU2(last state) -> BatchNorm -> Dropout ->
// Dense(tanh) -> Dense(1) -> sigmoid.
ParamSet make_param_layout(const ModelConfig& config);

// Xavier-uniform input and dense matrices, orthogonal recurrent matrices,
// zero biases, unit gamma, zero beta, running stats (0, 1).
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

struct GruWeights {
  ConstMatrixMap W_z, W_r, W_h;  // hidden x input
  ConstMatrixMap U_z, U_r, U_h;  // hidden x hidden
  ConstVectorMap b_z, b_r, b_h;
};

// layer is "gru1" or "gru2".
GruWeights gru_weights(const ParamSet& params, std::string_view layer);

// z = s(W_z x + U_z h + b_z), r = s(W_r x + U_r h + b_r),
// n = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * n.
Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruWeights& weights);

// Time-major batch: row t * batch_size + b holds timestep t of sample b.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;
  std::size_t batch_size = 0;
  std::size_t steps = 0;
};

Batch make_batch(const WindowDataset& data, std::span<const std::size_t> indices);

enum class Mode { Train, Eval };

struct ForwardOptions {
  Mode mode = Mode::Eval;
  // Required in Train mode when dropout_rate > 0.
  Rng* rng = nullptr;
  // Overrides the sampled dropout mask (batch x gru2_units), already scaled.
  const Eigen::MatrixXd* dropout_mask = nullptr;
};

struct GruCache {
  Eigen::MatrixXd states;  // (steps + 1) * B x H, block 0 is the zero initial state
  Eigen::MatrixXd z, r, n;  // steps * B x H
};

// Intermediates retained for backward. Holds a pointer to the batch, which
// must outlive the cache.
struct ForwardCache {
  const Batch* batch = nullptr;
  Mode mode = Mode::Eval;
  GruCache gru1, gru2;
  Eigen::MatrixXd bn_in, bn_hat, bn_out;
  Eigen::RowVectorXd bn_mean, bn_var, bn_inv_std;
  Eigen::MatrixXd mask, dropped;
  Eigen::MatrixXd dense1_out;
  Eigen::VectorXd probs;
};

struct ForwardResult {
  Eigen::VectorXd probs;
  ForwardCache cache;
};

ForwardResult forward(const Batch& batch, const ParamSet& params, const ModelConfig& config,
                      const ForwardOptions& options);

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probs, std::span<const double> labels);
double bce_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& labels);

// Exact gradient of bce_loss(probs, labels) w.r.t. every tensor, including
// the batch-statistics path of batch norm. Running statistics get zero
// gradient. Requires a Train-mode cache.
ParamSet backward(const ForwardCache& cache, const ParamSet& params, const ModelConfig& config,
                  const Eigen::VectorXd& labels);

// running <- momentum * running + (1 - momentum) * batch statistic.
void update_batchnorm_stats(ParamSet& params, const ForwardCache& cache, double momentum);

// Eval-mode probabilities for every window of `data`.
Eigen::VectorXd predict(const WindowDataset& data, const ParamSet& params,
                        const ModelConfig& config, std::size_t chunk = 512);

}  // namespace fscl::nn
