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
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "fscl/features.hpp"
#include "fscl/fed/fedavg.hpp"
#include "fscl/fed/partition.hpp"
#include "fscl/nn/model.hpp"
#include "fscl/nn/trainer.hpp"

namespace fscl::fed {

// Preset*: the fixed per-client counts (needs a large corpus). Scaled*: the same
// per-client class shares applied to whatever the training split holds.
enum class PartitionKind {
  IID,
  Dirichlet,
  PresetFig1IID,
  PresetFig1NonIID,
  ScaledFig1IID,
  ScaledFig1NonIID,
};

std::string_view to_string(PartitionKind kind) noexcept;
PartitionKind parse_partition_kind(std::string_view text);

struct PartitionSpec {
  PartitionKind kind = PartitionKind::IID;
  double alpha = 0.5;  // Dirichlet concentration
};

struct FedConfig {
  std::size_t n_clients = 10;
  std::size_t rounds = 6;
  std::size_t local_epochs = 20;
  PartitionSpec partition;
  std::uint64_t seed = 42;
  double early_stop_threshold = 0.90;
  std::size_t client_parallelism = 1;
  // Fraction of clients selected per round; 1.0 means every client, every round.
  double participation_fraction = 1.0;

  void validate() const;
};

// Everything upstream of the federation: split, features, model.
struct PipelineConfig {
  SplitSpec split;
  FeatureConfig features;
  nn::ModelConfig model;
};

struct PreparedData {
  TfIdfVocab vocab;
  std::vector<Trace> train;
  std::vector<Trace> val;
  WindowDataset train_set;
  WindowDataset val_set;
  nn::ModelConfig model;  // input_dim set to the fitted vocabulary size
};

// Trace-level split, vocabulary fitted on the training side only, windowing.
PreparedData prepare_data(std::span<const Trace> corpus, const PipelineConfig& pipeline);

struct ClientSummary {
  std::size_t client_id = 0;
  std::size_t n_samples = 0;
  double local_accuracy = 0.0;  // last local epoch, window level
};

struct RoundReport {
  std::size_t round = 0;  // 0 = untrained initial model
  nn::Evaluation global;  // on the validation split
  double train_accuracy = 0.0;  // trace level, on the union of client data
  std::vector<ClientSummary> per_client;
  double wall_time = 0.0;
};

struct FederatedResult {
  nn::ParamSet final_params;
  std::vector<RoundReport> rounds;
  bool early_stopped = false;
  std::vector<std::size_t> shard_sizes;  // traces per client
};

using RoundCallback = std::function<void(const RoundReport&)>;

// Source of client updates for one round, whatever carries them.
class ClientPool {
 public:
  virtual ~ClientPool() = default;
  virtual std::size_t client_count() const = 0;
  // Trains every selected client from `global`; results in ascending client_id.
  virtual std::vector<ClientUpdate> train_round(std::uint32_t round, const nn::ParamSet& global,
                                                std::span<const std::size_t> selected) = 0;
};

struct LocalTrainingConfig {
  std::size_t epochs = 20;
  double noise_sigma = 0.02;
  std::uint64_t seed = 42;
};

// One client's local training: fresh optimizer state, rng derived from
// (seed, round, client_id).
ClientUpdate local_update(std::size_t client_id, std::uint32_t round, const nn::ParamSet& global,
                          const WindowDataset& shard, const nn::ModelConfig& model,
                          const LocalTrainingConfig& training);

// In-process clients, optionally trained on parallel threads.
class LocalClientPool final : public ClientPool {
 public:
  LocalClientPool(std::vector<WindowDataset> shards, nn::ModelConfig model,
                  LocalTrainingConfig training, std::size_t parallelism);

  std::size_t client_count() const override { return shards_.size(); }
  std::vector<ClientUpdate> train_round(std::uint32_t round, const nn::ParamSet& global,
                                        std::span<const std::size_t> selected) override;

 private:
  std::vector<WindowDataset> shards_;
  nn::ModelConfig model_;
  LocalTrainingConfig training_;
  std::size_t parallelism_;
};

// Synchronous rounds: select, broadcast, train, aggregate, evaluate. Stops
// early once union-train and validation trace accuracy both exceed the
// threshold.
FederatedResult run_rounds(ClientPool& pool, const FedConfig& config, const nn::ModelConfig& model,
                           const WindowDataset& train_union, const WindowDataset& validation,
                           nn::ParamSet initial, const RoundCallback& on_round = {});

// Client ids taking part in `round` (all of them at fraction 1.0).
std::vector<std::size_t> select_clients(const FedConfig& config, std::uint32_t round);

Partition make_partition(std::span<const Trace> train, const FedConfig& config);

// Prepared data plus per-client window datasets.
struct FederatedSetup {
  PreparedData data;
  std::vector<WindowDataset> shards;
  std::vector<std::size_t> shard_sizes;  // traces per client
  WindowDataset train_union;             // every trace held by some client
  LocalTrainingConfig training;
};

FederatedSetup prepare_federated(std::span<const Trace> corpus, const FedConfig& config,
                                 const PipelineConfig& pipeline);

FederatedResult run_federated(std::span<const Trace> corpus, const FedConfig& config,
                              const PipelineConfig& pipeline, const RoundCallback& on_round = {});

struct CentralizedConfig {
  std::size_t max_epochs = 100;
  double early_stop_threshold = 0.90;
  bool early_stopping = true;
  std::uint64_t seed = 42;
};

struct CentralizedResult {
  nn::ParamSet params;
  std::vector<nn::EpochRecord> history;
  bool early_stopped = false;
  nn::Evaluation validation;
};

// Trains on the whole training split with the same init and training stream
// a single federated client would get in round 1.
CentralizedResult run_centralized(std::span<const Trace> corpus, const PipelineConfig& pipeline,
                                  const CentralizedConfig& config);

std::uint64_t init_seed(std::uint64_t seed) noexcept;

}  // namespace fscl::fed
