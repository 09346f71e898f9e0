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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fscl/error.hpp"
#include "fscl/nn/params.hpp"

namespace fscl::transport {

// Frame layout:
//   magic "FSCL" | version u8 | kind u8 | payload length u32 BE | payload | crc32(payload) u32 BE
// Integers inside payloads are big-endian; tensor data is little-endian f32.
// Non-empty payloads start with a copy of the kind byte.
inline constexpr std::array<std::uint8_t, 4> kMagic = {0x46, 0x53, 0x43, 0x4C};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr std::size_t kMaxPayload = 1u << 30;

enum class MessageKind : std::uint8_t {
  Hello = 1,
  GlobalWeights = 2,
  ClientUpdate = 3,
  RoundDone = 4,
  Shutdown = 5,
};

struct Hello {
  std::uint32_t client_id = 0;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct GlobalWeights {
  std::uint32_t round = 0;
  nn::ParamSet weights;
  friend bool operator==(const GlobalWeights&, const GlobalWeights&) = default;
};

struct ClientUpdateMsg {
  std::uint32_t round = 0;
  std::uint32_t client_id = 0;
  std::uint64_t n_samples = 0;
  nn::ParamSet weights;
  friend bool operator==(const ClientUpdateMsg&, const ClientUpdateMsg&) = default;
};

struct RoundDone {
  std::uint32_t round = 0;
  friend bool operator==(const RoundDone&, const RoundDone&) = default;
};

struct Shutdown {
  friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

using WireMessage = std::variant<Hello, GlobalWeights, ClientUpdateMsg, RoundDone, Shutdown>;

MessageKind kind_of(const WireMessage& msg) noexcept;
std::string_view to_string(MessageKind kind) noexcept;

enum class WireErrorCode {
  Truncated,
  BadMagic,
  VersionMismatch,
  UnknownKind,
  ChecksumMismatch,
  TrailingBytes,
  Malformed,
  ConnectionRefused,
  Closed,
  Io,
};

std::string_view to_string(WireErrorCode code) noexcept;

class WireError : public Error {
 public:
  WireError(WireErrorCode code, const std::string& detail)
      : Error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  WireErrorCode code() const noexcept { return code_; }

 private:
  WireErrorCode code_;
};

struct FrameHeader {
  MessageKind kind;
  std::uint32_t payload_length;
};

// Validates magic, version and kind of the first kHeaderSize bytes.
FrameHeader decode_header(std::span<const std::uint8_t> header);

std::vector<std::uint8_t> encode(const WireMessage& msg);

// Decodes exactly one frame; `bytes` must contain nothing else.
WireMessage decode(std::span<const std::uint8_t> bytes);

// Tensor block shared by weight-carrying messages and checkpoints.
void encode_tensors(const nn::ParamSet& params, std::vector<std::uint8_t>& out);
nn::ParamSet decode_tensors(std::span<const std::uint8_t>& in);

// Rounds every value through 32-bit float, i.e. what a peer receives.
nn::ParamSet quantize_f32(const nn::ParamSet& params);

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept;

}  // namespace fscl::transport
