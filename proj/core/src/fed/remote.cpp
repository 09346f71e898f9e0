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

#include "fscl/fed/remote.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include "fscl/error.hpp"

namespace fscl::fed {

using transport::Channel;
using transport::ClientUpdateMsg;
using transport::GlobalWeights;

TransportClientPool::TransportClientPool(std::vector<Channel> channels)
    : channels_(std::move(channels)) {}

TransportClientPool::~TransportClientPool() {
  try {
    shutdown();
  } catch (...) {
  }
}

TransportClientPool TransportClientPool::accept_clients(transport::TcpListener& listener,
                                                        std::size_t n_clients) {
  std::vector<std::optional<Channel>> slots(n_clients);
  for (std::size_t i = 0; i < n_clients; ++i) {
    Channel ch = listener.accept();
    auto hello = ch.recv();
    const auto* h = hello ? std::get_if<transport::Hello>(&*hello) : nullptr;
    if (h == nullptr) throw Error("client did not start with Hello");
    if (h->client_id >= n_clients || slots[h->client_id])
      throw Error("unexpected or duplicate client id " + std::to_string(h->client_id));
    slots[h->client_id] = std::move(ch);
  }
  std::vector<Channel> channels;
  for (auto& s : slots) channels.push_back(std::move(*s));
  return TransportClientPool(std::move(channels));
}

std::vector<ClientUpdate> TransportClientPool::train_round(std::uint32_t round,
                                                           const nn::ParamSet& global,
                                                           std::span<const std::size_t> selected) {
  // Broadcast first so remote clients train concurrently.
  for (std::size_t id : selected) channels_.at(id).send(GlobalWeights{round, global});

  std::vector<ClientUpdate> updates;
  updates.reserve(selected.size());
  for (std::size_t id : selected) {
    auto msg = channels_.at(id).recv();
    if (!msg) throw Error("client " + std::to_string(id) + " disconnected during round " +
                          std::to_string(round));
    auto* u = std::get_if<ClientUpdateMsg>(&*msg);
    if (u == nullptr || u->round != round || u->client_id != id)
      throw Error("client " + std::to_string(id) + " sent an unexpected message in round " +
                  std::to_string(round));
    ClientUpdate update;
    update.client_id = id;
    update.n_samples = static_cast<std::size_t>(u->n_samples);
    update.weights = std::move(u->weights);
    update.weights.require_same_layout(global, "client update");
    updates.push_back(std::move(update));
  }
  for (std::size_t id : selected) channels_.at(id).send(transport::RoundDone{round});
  return updates;
}

void TransportClientPool::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  for (auto& ch : channels_) {
    try {
      ch.send(transport::Shutdown{});
    } catch (const transport::WireError&) {
    }
  }
}

void serve_client(Channel& channel, std::size_t client_id, const WindowDataset& shard,
                  const nn::ModelConfig& model, const LocalTrainingConfig& training,
                  bool send_hello) {
  if (send_hello) channel.send(transport::Hello{static_cast<std::uint32_t>(client_id)});
  const nn::ParamSet layout = nn::make_param_layout(model);
  for (;;) {
    auto msg = channel.recv();
    if (!msg || std::holds_alternative<transport::Shutdown>(*msg)) return;
    if (std::holds_alternative<transport::RoundDone>(*msg)) continue;
    auto* g = std::get_if<GlobalWeights>(&*msg);
    if (g == nullptr) throw Error("client received an unexpected message");
    g->weights.require_same_layout(layout, "global weights");
    ClientUpdate u = local_update(client_id, g->round, g->weights, shard, model, training);
    channel.send(ClientUpdateMsg{g->round, static_cast<std::uint32_t>(client_id),
                                 static_cast<std::uint64_t>(u.n_samples), std::move(u.weights)});
  }
}

FederatedResult run_federated_remote(std::span<const Trace> corpus, const FedConfig& config,
                                     const PipelineConfig& pipeline, TransportKind transport,
                                     const RoundCallback& on_round) {
  FederatedSetup setup = prepare_federated(corpus, config, pipeline);
  const std::size_t k = setup.shards.size();

  std::exception_ptr failure;
  std::mutex failure_mu;
  auto record_failure = [&] {
    std::lock_guard lock(failure_mu);
    if (!failure) failure = std::current_exception();
  };

  std::vector<std::thread> clients;
  std::vector<Channel> server_side;
  std::optional<transport::TcpListener> listener;
  if (transport == TransportKind::Memory) {
    for (std::size_t c = 0; c < k; ++c) {
      auto [server_end, client_end] = transport::channel_pair();
      server_side.push_back(std::move(server_end));
      clients.emplace_back([&, c, ch = std::move(client_end)]() mutable {
        try {
          serve_client(ch, c, setup.shards[c], setup.data.model, setup.training, false);
        } catch (...) {
          record_failure();
        }
      });
    }
  } else {
    listener = transport::TcpListener::listen("127.0.0.1", 0);
    const std::uint16_t port = listener->port();
    for (std::size_t c = 0; c < k; ++c) {
      clients.emplace_back([&, c, port] {
        try {
          Channel ch = transport::tcp_connect("127.0.0.1", port);
          serve_client(ch, c, setup.shards[c], setup.data.model, setup.training);
        } catch (...) {
          record_failure();
        }
      });
    }
  }

  FederatedResult result;
  try {
    TransportClientPool pool = listener ? TransportClientPool::accept_clients(*listener, k)
                                        : TransportClientPool(std::move(server_side));
    result = run_rounds(pool, config, setup.data.model, setup.train_union, setup.data.val_set,
                        nn::init_params(setup.data.model, init_seed(config.seed)), on_round);
    pool.shutdown();
  } catch (...) {
    record_failure();
  }
  for (auto& t : clients) t.join();
  if (failure) std::rethrow_exception(failure);
  result.shard_sizes = std::move(setup.shard_sizes);
  return result;
}

}  // namespace fscl::fed
