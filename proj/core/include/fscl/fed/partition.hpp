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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fscl/traces.hpp"

namespace fscl::fed {

// Per-client lists of indices into the partitioned trace list, ascending.
using Partition = std::vector<std::vector<std::size_t>>;

// Stratified round-robin deal of shuffled traces: per-class shard sizes differ
// by at most one. Needs at least K traces of each class.
Partition partition_iid(std::span<const Trace> traces, std::size_t n_clients, std::uint64_t seed);

// Label skew via per-class Dirichlet(alpha) client proportions. Proportions
// are redrawn until every client holds at least one trace.
Partition partition_noniid_dirichlet(std::span<const Trace> traces, std::size_t n_clients,
                                     double alpha, std::uint64_t seed,
                                     std::size_t max_retries = 1000);

enum class Fig1Variant { IID, NonIID };

inline constexpr std::array<std::size_t, 10> kFig1IidBenign = {65, 62, 66, 60, 61,
                                                               63, 59, 64, 67, 62};
inline constexpr std::array<std::size_t, 10> kFig1IidMalicious = {60, 63, 61, 65, 64,
                                                                  62, 66, 61, 60, 64};
inline constexpr std::array<std::size_t, 10> kFig1NonIidBenign = {40, 30,  122, 61, 45,
                                                                  91, 153, 122, 34, 301};
inline constexpr std::array<std::size_t, 10> kFig1NonIidMalicious = {61,  71,  30, 40, 15,
                                                                     112, 152, 81, 36, 158};

struct PresetPartition {
  Partition shards;
  std::vector<std::size_t> held_out;  // surplus traces; never given to a client
};

// Ten clients with the fixed per-class counts above, filled in input order.
PresetPartition partition_preset_fig1(std::span<const Trace> traces, Fig1Variant variant);

// Same ten-client shape at any corpus size: each class is divided in the
// proportions of the fixed counts (largest remainder), with no surplus.
Partition partition_fig1_proportional(std::span<const Trace> traces, Fig1Variant variant);

std::vector<std::vector<Trace>> materialize(std::span<const Trace> traces,
                                            const Partition& partition);

}  // namespace fscl::fed
