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
#include <optional>
#include <vector>

#include "fscl/features.hpp"
#include "fscl/metrics.hpp"
#include "fscl/nn/adamw.hpp"
#include "fscl/nn/model.hpp"
#include "fscl/random.hpp"

namespace fscl::nn {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean train-mode batch loss
  double window_accuracy = 0.0;
  // Eval-mode trace-level accuracies; present when tracked or early stopping.
  std::optional<double> train_accuracy;
  std::optional<double> val_accuracy;
};

struct TrainOptions {
  std::size_t epochs = 20;
  double noise_sigma = 0.02;
  // Stop once train and validation trace accuracy both exceed this.
  std::optional<double> early_stop_threshold;
  const WindowDataset* validation = nullptr;
  bool track_trace_accuracy = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  bool early_stopped = false;
};

// Seeded shuffle each epoch, fresh input noise per batch, one AdamW step per
// batch. A trailing batch of one sample is merged into the previous batch.
TrainResult train_epochs(const WindowDataset& data, ParamSet& params, OptimizerState& state,
                         const ModelConfig& config, const TrainOptions& options, Rng& rng);

struct Evaluation {
  MetricSet window;
  MetricSet trace;
};

Evaluation evaluate_model(const WindowDataset& data, const ParamSet& params,
                          const ModelConfig& config, double threshold = 0.5);

}  // namespace fscl::nn
