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
#include <vector>

#include "fscl/fed/engine.hpp"
#include "fscl/transport/channel.hpp"

namespace fscl::fed {

// Server-side pool whose clients live behind transport channels; weights
// cross the wire at 32-bit precision.
class TransportClientPool final : public ClientPool {
 public:
  // channels[i] connects to client i.
  explicit TransportClientPool(std::vector<transport::Channel> channels);
  ~TransportClientPool() override;

  // Accepts `n_clients` connections and orders them by their Hello client_id.
  static TransportClientPool accept_clients(transport::TcpListener& listener, std::size_t n_clients);

  std::size_t client_count() const override { return channels_.size(); }
  std::vector<ClientUpdate> train_round(std::uint32_t round, const nn::ParamSet& global,
                                        std::span<const std::size_t> selected) override;

  // Sends Shutdown to every client. Called by the destructor if needed.
  void shutdown();

 private:
  std::vector<transport::Channel> channels_;
  bool shut_down_ = false;
};

// Client loop: announces itself with Hello (unless `send_hello` is false),
// trains on every GlobalWeights it receives and replies with a
// ClientUpdateMsg, returns on Shutdown or when the server closes.
void serve_client(transport::Channel& channel, std::size_t client_id, const WindowDataset& shard,
                  const nn::ModelConfig& model, const LocalTrainingConfig& training,
                  bool send_hello = true);

enum class TransportKind { Memory, Tcp };

// Federated run with every client on its own thread behind a real channel
// (in-memory pipe or loopback TCP). Weights are rounded to 32 bits in transit,
// so results differ slightly from run_federated.
FederatedResult run_federated_remote(std::span<const Trace> corpus, const FedConfig& config,
                                     const PipelineConfig& pipeline, TransportKind transport,
                                     const RoundCallback& on_round = {});

}  // namespace fscl::fed
