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

#include "fscl/fed/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "fscl/error.hpp"
#include "fscl/random.hpp"

namespace fscl::fed {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RoundReport evaluate_round(std::size_t round, const nn::ParamSet& params,
                           const nn::ModelConfig& model, const WindowDataset& train_union,
                           const WindowDataset& validation) {
  RoundReport report;
  report.round = round;
  report.global = nn::evaluate_model(validation, params, model);
  report.train_accuracy = nn::evaluate_model(train_union, params, model).trace.accuracy;
  return report;
}

}  // namespace

std::string_view to_string(PartitionKind kind) noexcept {
  switch (kind) {
    case PartitionKind::IID: return "iid";
    case PartitionKind::Dirichlet: return "dirichlet";
    case PartitionKind::PresetFig1IID: return "preset_iid";
    case PartitionKind::PresetFig1NonIID: return "preset_noniid";
    case PartitionKind::ScaledFig1IID: return "scaled_iid";
    case PartitionKind::ScaledFig1NonIID: return "scaled_noniid";
  }
  return "?";
}

PartitionKind parse_partition_kind(std::string_view text) {
  for (auto kind : {PartitionKind::IID, PartitionKind::Dirichlet, PartitionKind::PresetFig1IID,
                    PartitionKind::PresetFig1NonIID, PartitionKind::ScaledFig1IID,
                    PartitionKind::ScaledFig1NonIID})
    if (text == to_string(kind)) return kind;
  throw ParseError("unknown partition kind '" + std::string(text) +
                   "' (expected iid, dirichlet, preset_iid, preset_noniid, scaled_iid or scaled_noniid)");
}

void FedConfig::validate() const {
  IssueList issues;
  issues.check(n_clients >= 1, "fed.n_clients must be >= 1");
  issues.check(rounds >= 1, "fed.rounds must be >= 1");
  issues.check(local_epochs >= 1, "fed.local_epochs must be >= 1");
  issues.check(partition.alpha > 0.0, "fed.partition.alpha must be > 0");
  const bool ten_clients = partition.kind == PartitionKind::PresetFig1IID ||
                           partition.kind == PartitionKind::PresetFig1NonIID ||
                           partition.kind == PartitionKind::ScaledFig1IID ||
                           partition.kind == PartitionKind::ScaledFig1NonIID;
  issues.check(!ten_clients || n_clients == 10,
               "fed.partition " + std::string(to_string(partition.kind)) +
                   " requires fed.n_clients = 10");
  issues.check(client_parallelism >= 1, "fed.client_parallelism must be >= 1");
  issues.check(participation_fraction > 0.0 && participation_fraction <= 1.0,
               "fed.participation_fraction must be in (0, 1]");
  issues.throw_if_any();
}

std::uint64_t init_seed(std::uint64_t seed) noexcept { return derive_seed(seed, {stream::kInit}); }

PreparedData prepare_data(std::span<const Trace> corpus, const PipelineConfig& pipeline) {
  pipeline.features.validate();
  PreparedData out;
  auto split = split_train_val(corpus, pipeline.split);
  out.train = std::move(split.train);
  out.val = std::move(split.val);
  out.vocab = fit_vocab(out.train, pipeline.features.max_terms);
  out.model = pipeline.model;
  out.model.input_dim = out.vocab.size();
  out.model.validate();
  out.train_set = build_dataset(out.train, out.vocab, pipeline.features);
  out.val_set = build_dataset(out.val, out.vocab, pipeline.features);
  return out;
}

ClientUpdate local_update(std::size_t client_id, std::uint32_t round, const nn::ParamSet& global,
                          const WindowDataset& shard, const nn::ModelConfig& model,
                          const LocalTrainingConfig& training) {
  ClientUpdate update;
  update.client_id = client_id;
  update.weights = global;
  update.n_samples = shard.size();
  nn::OptimizerState state = nn::OptimizerState::for_params(update.weights);
  Rng rng(derive_seed(training.seed, {stream::kTrain, round, client_id}));
  nn::TrainOptions options;
  options.epochs = training.epochs;
  options.noise_sigma = training.noise_sigma;
  update.local_history =
      nn::train_epochs(shard, update.weights, state, model, options, rng).history;
  return update;
}

LocalClientPool::LocalClientPool(std::vector<WindowDataset> shards, nn::ModelConfig model,
                                 LocalTrainingConfig training, std::size_t parallelism)
    : shards_(std::move(shards)),
      model_(model),
      training_(training),
      parallelism_(std::max<std::size_t>(1, parallelism)) {}

std::vector<ClientUpdate> LocalClientPool::train_round(std::uint32_t round,
                                                       const nn::ParamSet& global,
                                                       std::span<const std::size_t> selected) {
  std::vector<ClientUpdate> results(selected.size());
  const std::size_t workers = std::min(parallelism_, selected.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < selected.size(); ++i)
      results[i] = local_update(selected[i], round, global, shards_.at(selected[i]), model_, training_);
    return results;
  }

  // Each job writes only its own slot, so scheduling cannot change the result.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < selected.size(); i = next++) {
        try {
          results[i] =
              local_update(selected[i], round, global, shards_.at(selected[i]), model_, training_);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<std::size_t> select_clients(const FedConfig& config, std::uint32_t round) {
  std::vector<std::size_t> ids(config.n_clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (config.participation_fraction >= 1.0) return ids;
  const auto m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.participation_fraction *
                                            static_cast<double>(config.n_clients))));
  Rng rng(derive_seed(config.seed, {stream::kSelect, round}));
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

FederatedResult run_rounds(ClientPool& pool, const FedConfig& config, const nn::ModelConfig& model,
                           const WindowDataset& train_union, const WindowDataset& validation,
                           nn::ParamSet initial, const RoundCallback& on_round) {
  config.validate();
  if (pool.client_count() != config.n_clients)
    throw Error("run_rounds: pool has " + std::to_string(pool.client_count()) +
                " clients, config expects " + std::to_string(config.n_clients));

  FederatedResult result;
  result.final_params = std::move(initial);

  auto start = Clock::now();
  RoundReport baseline = evaluate_round(0, result.final_params, model, train_union, validation);
  baseline.wall_time = seconds_since(start);
  if (on_round) on_round(baseline);
  result.rounds.push_back(std::move(baseline));

  for (std::size_t r = 1; r <= config.rounds; ++r) {
    start = Clock::now();
    const auto round = static_cast<std::uint32_t>(r);
    const auto selected = select_clients(config, round);
    auto updates = pool.train_round(round, result.final_params, selected);
    result.final_params = fedavg_aggregate(updates);

    RoundReport report = evaluate_round(r, result.final_params, model, train_union, validation);
    for (const auto& u : updates) {
      ClientSummary s{u.client_id, u.n_samples, 0.0};
      if (!u.local_history.empty()) s.local_accuracy = u.local_history.back().window_accuracy;
      report.per_client.push_back(s);
    }
    report.wall_time = seconds_since(start);
    if (on_round) on_round(report);
    const bool stop = report.train_accuracy > config.early_stop_threshold &&
                      report.global.trace.accuracy > config.early_stop_threshold;
    result.rounds.push_back(std::move(report));
    if (stop) {
      result.early_stopped = r < config.rounds;
      break;
    }
  }
  return result;
}

Partition make_partition(std::span<const Trace> train, const FedConfig& config) {
  const std::uint64_t seed = derive_seed(config.seed, {stream::kPartition});
  switch (config.partition.kind) {
    case PartitionKind::IID:
      return partition_iid(train, config.n_clients, seed);
    case PartitionKind::Dirichlet:
      return partition_noniid_dirichlet(train, config.n_clients, config.partition.alpha, seed);
    case PartitionKind::PresetFig1IID:
      return partition_preset_fig1(train, Fig1Variant::IID).shards;
    case PartitionKind::PresetFig1NonIID:
      return partition_preset_fig1(train, Fig1Variant::NonIID).shards;
    case PartitionKind::ScaledFig1IID:
      return partition_fig1_proportional(train, Fig1Variant::IID);
    case PartitionKind::ScaledFig1NonIID:
      return partition_fig1_proportional(train, Fig1Variant::NonIID);
  }
  throw Error("make_partition: unknown partition kind");
}

FederatedSetup prepare_federated(std::span<const Trace> corpus, const FedConfig& config,
                                 const PipelineConfig& pipeline) {
  config.validate();
  FederatedSetup setup;
  setup.data = prepare_data(corpus, pipeline);
  const auto& train = setup.data.train;
  const Partition partition = make_partition(train, config);

  std::vector<std::size_t> union_idx;
  for (const auto& shard : partition) {
    union_idx.insert(union_idx.end(), shard.begin(), shard.end());
    setup.shard_sizes.push_back(shard.size());
  }
  std::sort(union_idx.begin(), union_idx.end());
  for (const auto& traces : materialize(train, partition))
    setup.shards.push_back(build_dataset(traces, setup.data.vocab, pipeline.features));
  setup.train_union = union_idx.size() == train.size()
                          ? setup.data.train_set
                          : build_dataset(materialize(train, {union_idx}).front(),
                                          setup.data.vocab, pipeline.features);
  setup.training = {config.local_epochs, pipeline.features.noise_sigma, config.seed};
  return setup;
}

FederatedResult run_federated(std::span<const Trace> corpus, const FedConfig& config,
                              const PipelineConfig& pipeline, const RoundCallback& on_round) {
  FederatedSetup setup = prepare_federated(corpus, config, pipeline);
  LocalClientPool pool(std::move(setup.shards), setup.data.model, setup.training,
                       config.client_parallelism);
  FederatedResult result =
      run_rounds(pool, config, setup.data.model, setup.train_union, setup.data.val_set,
                 nn::init_params(setup.data.model, init_seed(config.seed)), on_round);
  result.shard_sizes = std::move(setup.shard_sizes);
  return result;
}

CentralizedResult run_centralized(std::span<const Trace> corpus, const PipelineConfig& pipeline,
                                  const CentralizedConfig& config) {
  PreparedData data = prepare_data(corpus, pipeline);
  CentralizedResult out;
  out.params = nn::init_params(data.model, init_seed(config.seed));
  nn::OptimizerState state = nn::OptimizerState::for_params(out.params);
  // Same stream as client 0 in round 1 of a federated run.
  Rng rng(derive_seed(config.seed, {stream::kTrain, 1, 0}));

  nn::TrainOptions options;
  options.epochs = config.max_epochs;
  options.noise_sigma = pipeline.features.noise_sigma;
  options.validation = &data.val_set;
  options.track_trace_accuracy = true;
  if (config.early_stopping) options.early_stop_threshold = config.early_stop_threshold;

  auto trained = nn::train_epochs(data.train_set, out.params, state, data.model, options, rng);
  out.history = std::move(trained.history);
  out.early_stopped = trained.early_stopped;
  out.validation = nn::evaluate_model(data.val_set, out.params, data.model);
  return out;
}

}  // namespace fscl::fed
