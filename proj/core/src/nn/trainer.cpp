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

#include "fscl/nn/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "fscl/error.hpp"

namespace fscl::nn {

TrainResult train_epochs(const WindowDataset& data, ParamSet& params, OptimizerState& state,
                         const ModelConfig& config, const TrainOptions& options, Rng& rng) {
  TrainResult result;
  if (options.epochs == 0) return result;
  if (data.empty()) throw Error("train_epochs: empty dataset");
  if (data.size() < 2) throw Error("train_epochs: need at least 2 windows for batch norm");
  if (options.early_stop_threshold && options.validation == nullptr)
    throw Error("train_epochs: early stopping needs a validation dataset");
  if (state.m.size() != params.size()) state = OptimizerState::for_params(params);

  const std::size_t bs = config.batch_size;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + bs);
      if (order.size() - end == 1) end = order.size();
      const std::span<const std::size_t> idx(order.data() + start, end - start);

      Batch batch = make_batch(data, idx);
      inject_noise_inplace(batch.inputs, options.noise_sigma, rng);
      ForwardOptions fo{Mode::Train, &rng, nullptr};
      const ForwardResult fwd = forward(batch, params, config, fo);
      const ParamSet grads = backward(fwd.cache, params, config, batch.labels);
      adamw_step(params, grads, state, config);
      update_batchnorm_stats(params, fwd.cache, config.bn_momentum);

      loss_sum += bce_loss(fwd.probs, batch.labels) * static_cast<double>(idx.size());
      for (Eigen::Index i = 0; i < fwd.probs.size(); ++i)
        correct += ((fwd.probs(i) >= 0.5) == (batch.labels(i) > 0.5)) ? 1 : 0;
      start = end;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(data.size());
    rec.window_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    if (options.track_trace_accuracy || options.early_stop_threshold) {
      rec.train_accuracy = evaluate_model(data, params, config).trace.accuracy;
      if (options.validation != nullptr)
        rec.val_accuracy = evaluate_model(*options.validation, params, config).trace.accuracy;
    }
    result.history.push_back(rec);

    if (options.early_stop_threshold && rec.train_accuracy && rec.val_accuracy &&
        *rec.train_accuracy > *options.early_stop_threshold &&
        *rec.val_accuracy > *options.early_stop_threshold) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

Evaluation evaluate_model(const WindowDataset& data, const ParamSet& params,
                          const ModelConfig& config, double threshold) {
  if (data.empty()) throw Error("evaluate_model: empty dataset");
  const Eigen::VectorXd probs = predict(data, params, config);
  const std::span<const double> window_probs(probs.data(), static_cast<std::size_t>(probs.size()));
  std::vector<int> window_labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) window_labels[i] = data.samples[i].label;

  Evaluation out;
  out.window = evaluate(window_probs, window_labels, threshold, MetricLevel::Window);
  const auto trace_probs = aggregate_trace_level(window_probs, data.sample_trace, data.trace_count());
  out.trace = evaluate(trace_probs, data.trace_labels, threshold, MetricLevel::Trace);
  return out;
}

}  // namespace fscl::nn
