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

#include "fscl/fed/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fscl/error.hpp"
#include "fscl/random.hpp"

namespace fscl::fed {
namespace {

std::array<std::vector<std::size_t>, 2> by_class(std::span<const Trace> traces) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t i = 0; i < traces.size(); ++i) out[label_value(traces[i].label)].push_back(i);
  return out;
}

void sort_shards(Partition& p) {
  for (auto& shard : p) std::sort(shard.begin(), shard.end());
}

}  // namespace

Partition partition_iid(std::span<const Trace> traces, std::size_t n_clients, std::uint64_t seed) {
  if (n_clients == 0) throw Error("partition_iid: need at least one client");
  auto classes = by_class(traces);
  for (const auto& members : classes) {
    if (members.size() < n_clients)
      throw Error("partition_iid: " + std::to_string(members.size()) +
                  " traces in a class cannot cover " + std::to_string(n_clients) + " clients");
  }
  Rng rng(seed);
  Partition shards(n_clients);
  // Continue the deal across classes so total shard sizes also stay within one.
  std::size_t next = 0;
  for (auto& members : classes) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) shards[next++ % n_clients].push_back(idx);
  }
  sort_shards(shards);
  return shards;
}

Partition partition_noniid_dirichlet(std::span<const Trace> traces, std::size_t n_clients,
                                     double alpha, std::uint64_t seed, std::size_t max_retries) {
  if (n_clients == 0) throw Error("partition_noniid_dirichlet: need at least one client");
  if (!(alpha > 0.0)) throw Error("partition_noniid_dirichlet: alpha must be > 0");
  if (traces.size() < n_clients)
    throw Error("partition_noniid_dirichlet: " + std::to_string(traces.size()) +
                " traces cannot cover " + std::to_string(n_clients) + " clients");

  Rng rng(seed);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  auto classes = by_class(traces);

  for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
    Partition shards(n_clients);
    bool degenerate = false;
    for (auto members : classes) {
      if (members.empty()) continue;
      std::shuffle(members.begin(), members.end(), rng);
      std::vector<double> weights(n_clients);
      double total = 0.0;
      for (double& w : weights) total += (w = gamma(rng));
      if (!(total > 0.0)) {
        degenerate = true;
        break;
      }
      // Cut the shuffled class at rounded cumulative proportions.
      double cumulative = 0.0;
      std::size_t begin = 0;
      for (std::size_t k = 0; k < n_clients; ++k) {
        cumulative += weights[k] / total;
        const std::size_t end =
            k + 1 == n_clients
                ? members.size()
                : std::min(members.size(), static_cast<std::size_t>(std::llround(
                                               cumulative * static_cast<double>(members.size()))));
        for (std::size_t j = begin; j < std::max(begin, end); ++j)
          shards[k].push_back(members[j]);
        begin = std::max(begin, end);
      }
    }
    if (degenerate) continue;
    if (std::all_of(shards.begin(), shards.end(), [](const auto& s) { return !s.empty(); })) {
      sort_shards(shards);
      return shards;
    }
  }
  throw Error("partition_noniid_dirichlet: could not give every client a trace after " +
              std::to_string(max_retries) + " draws (alpha=" + std::to_string(alpha) +
              ", K=" + std::to_string(n_clients) + ")");
}

PresetPartition partition_preset_fig1(std::span<const Trace> traces, Fig1Variant variant) {
  const auto& benign = variant == Fig1Variant::IID ? kFig1IidBenign : kFig1NonIidBenign;
  const auto& malicious = variant == Fig1Variant::IID ? kFig1IidMalicious : kFig1NonIidMalicious;
  const std::array<const std::array<std::size_t, 10>*, 2> counts = {&benign, &malicious};

  const auto classes = by_class(traces);
  for (int c = 0; c < 2; ++c) {
    const std::size_t need = std::accumulate(counts[c]->begin(), counts[c]->end(), std::size_t{0});
    if (classes[c].size() < need)
      throw Error(std::string("partition_preset_fig1: need ") + std::to_string(need) + " " +
                  (c == 0 ? "benign" : "malicious") + " traces, corpus has " +
                  std::to_string(classes[c].size()));
  }

  PresetPartition out;
  out.shards.resize(10);
  for (int c = 0; c < 2; ++c) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 10; ++k)
      for (std::size_t j = 0; j < (*counts[c])[k]; ++j) out.shards[k].push_back(classes[c][pos++]);
    out.held_out.insert(out.held_out.end(), classes[c].begin() + static_cast<std::ptrdiff_t>(pos),
                        classes[c].end());
  }
  sort_shards(out.shards);
  std::sort(out.held_out.begin(), out.held_out.end());
  return out;
}

Partition partition_fig1_proportional(std::span<const Trace> traces, Fig1Variant variant) {
  const auto& benign = variant == Fig1Variant::IID ? kFig1IidBenign : kFig1NonIidBenign;
  const auto& malicious = variant == Fig1Variant::IID ? kFig1IidMalicious : kFig1NonIidMalicious;
  const std::array<const std::array<std::size_t, 10>*, 2> counts = {&benign, &malicious};

  const auto classes = by_class(traces);
  Partition shards(10);
  for (int c = 0; c < 2; ++c) {
    const auto& w = *counts[c];
    const double total = static_cast<double>(std::accumulate(w.begin(), w.end(), std::size_t{0}));
    const double n = static_cast<double>(classes[c].size());
    std::array<std::size_t, 10> take{};
    std::array<double, 10> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      const double exact = static_cast<double>(w[k]) * n / total;
      take[k] = static_cast<std::size_t>(std::floor(exact));
      remainder[k] = exact - static_cast<double>(take[k]);
      assigned += take[k];
    }
    std::array<std::size_t, 10> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t j = 0; assigned < classes[c].size(); ++j, ++assigned) ++take[order[j]];

    std::size_t pos = 0;
    for (std::size_t k = 0; k < 10; ++k)
      for (std::size_t j = 0; j < take[k]; ++j) shards[k].push_back(classes[c][pos++]);
  }
  for (std::size_t k = 0; k < 10; ++k)
    if (shards[k].empty())
      throw Error("partition_fig1_proportional: corpus too small, client " +
                  std::to_string(k + 1) + " would get no traces");
  sort_shards(shards);
  return shards;
}

std::vector<std::vector<Trace>> materialize(std::span<const Trace> traces,
                                            const Partition& partition) {
  std::vector<std::vector<Trace>> out;
  out.reserve(partition.size());
  for (const auto& shard : partition) {
    auto& dst = out.emplace_back();
    dst.reserve(shard.size());
    for (std::size_t idx : shard) dst.push_back(traces[idx]);
  }
  return out;
}

}  // namespace fscl::fed
