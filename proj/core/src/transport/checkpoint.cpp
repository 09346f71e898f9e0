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

#include "fscl/transport/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "fscl/transport/wire.hpp"

namespace fscl::transport {
namespace {

constexpr std::array<std::uint8_t, 4> kCheckpointMagic = {'F', 'S', 'C', 'P'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nn::ParamSet& params,
                     std::uint32_t round, const nn::ModelConfig& config) {
  std::vector<std::uint8_t> bytes(kCheckpointMagic.begin(), kCheckpointMagic.end());
  const std::uint64_t hash = config.architecture_hash();
  for (int shift = 56; shift >= 0; shift -= 8) bytes.push_back(static_cast<std::uint8_t>(hash >> shift));
  const auto frame = encode(GlobalWeights{round, params});
  bytes.insert(bytes.end(), frame.begin(), frame.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const nn::ModelConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin()))
    throw Error("not a checkpoint file: " + path.string());
  std::uint64_t hash = 0;
  for (std::size_t i = 4; i < 12; ++i) hash = (hash << 8) | bytes[i];
  if (hash != config.architecture_hash())
    throw Error("checkpoint " + path.string() + " was written for a different model configuration");

  const auto msg = decode(std::span(bytes).subspan(12));
  const auto* weights = std::get_if<GlobalWeights>(&msg);
  if (weights == nullptr) throw Error("checkpoint does not hold a GlobalWeights frame");
  weights->weights.require_same_layout(nn::make_param_layout(config), "load_checkpoint");
  return Checkpoint{weights->round, weights->weights};
}

}  // namespace fscl::transport
