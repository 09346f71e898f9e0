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

#include "fscl/transport/wire.hpp"

#include <bit>
#include <cstring>
#include <type_traits>

#include <zlib.h>

namespace fscl::transport {
namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

template <typename T>
void put_be(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::is_unsigned_v<T>);
  for (int shift = (sizeof(T) - 1) * 8; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_f32_le(std::vector<std::uint8_t>& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
}

// Cursor over a payload; every read is bounds-checked.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t>& in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (in_.size() < n) throw WireError(WireErrorCode::Malformed, "payload ends early");
    auto head = in_.first(n);
    in_ = in_.subspan(n);
    return head;
  }

  std::uint8_t u8() { return take(1)[0]; }

  template <typename T>
  T be() {
    T v = 0;
    for (std::uint8_t b : take(sizeof(T))) v = static_cast<T>((v << 8) | b);
    return v;
  }

  float f32_le() {
    auto b = take(4);
    const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    return std::bit_cast<float>(bits);
  }

  bool done() const noexcept { return in_.empty(); }

 private:
  std::span<const std::uint8_t>& in_;
};

bool known_kind(std::uint8_t k) noexcept { return k >= 1 && k <= 5; }

}  // namespace

MessageKind kind_of(const WireMessage& msg) noexcept {
  return static_cast<MessageKind>(msg.index() + 1);
}

std::string_view to_string(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::Hello: return "Hello";
    case MessageKind::GlobalWeights: return "GlobalWeights";
    case MessageKind::ClientUpdate: return "ClientUpdate";
    case MessageKind::RoundDone: return "RoundDone";
    case MessageKind::Shutdown: return "Shutdown";
  }
  return "?";
}

std::string_view to_string(WireErrorCode code) noexcept {
  switch (code) {
    case WireErrorCode::Truncated: return "truncated frame";
    case WireErrorCode::BadMagic: return "bad magic";
    case WireErrorCode::VersionMismatch: return "version mismatch";
    case WireErrorCode::UnknownKind: return "unknown message kind";
    case WireErrorCode::ChecksumMismatch: return "checksum mismatch";
    case WireErrorCode::TrailingBytes: return "trailing bytes";
    case WireErrorCode::Malformed: return "malformed payload";
    case WireErrorCode::ConnectionRefused: return "connection refused";
    case WireErrorCode::Closed: return "channel closed";
    case WireErrorCode::Io: return "i/o error";
  }
  return "?";
}

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (!data.empty()) {
    const std::size_t n = std::min<std::size_t>(data.size(), 1u << 30);
    crc = ::crc32(crc, data.data(), static_cast<uInt>(n));
    data = data.subspan(n);
  }
  return static_cast<std::uint32_t>(crc);
}

void encode_tensors(const nn::ParamSet& params, std::vector<std::uint8_t>& out) {
  if (params.size() > 0xFFFF) throw WireError(WireErrorCode::Malformed, "too many tensors");
  put_be<std::uint16_t>(out, static_cast<std::uint16_t>(params.size()));
  for (const auto& t : params) {
    if (t.name.size() > 0xFFFF) throw WireError(WireErrorCode::Malformed, "tensor name too long");
    if (t.shape.size() > 0xFF) throw WireError(WireErrorCode::Malformed, "tensor rank too large");
    put_be<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u8(out, static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) put_be<std::uint32_t>(out, d);
    for (double v : t.values) put_f32_le(out, static_cast<float>(v));
  }
}

nn::ParamSet decode_tensors(std::span<const std::uint8_t>& in) {
  Reader r(in);
  nn::ParamSet params;
  const auto count = r.be<std::uint16_t>();
  for (std::uint16_t i = 0; i < count; ++i) {
    const auto name_len = r.be<std::uint16_t>();
    auto name_bytes = r.take(name_len);
    std::string name(name_bytes.begin(), name_bytes.end());
    const auto rank = r.u8();
    std::vector<std::uint32_t> shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      d = r.be<std::uint32_t>();
      numel *= d;
      if (numel > kMaxPayload) throw WireError(WireErrorCode::Malformed, "tensor too large");
    }
    if (params.find(name) != nullptr)
      throw WireError(WireErrorCode::Malformed, "duplicate tensor " + name);
    auto& t = params.add(name, shape, nn::infer_kind(name));
    for (double& v : t.values) v = static_cast<double>(r.f32_le());
  }
  return params;
}

nn::ParamSet quantize_f32(const nn::ParamSet& params) {
  nn::ParamSet out = params;
  for (auto& t : out)
    for (double& v : t.values) v = static_cast<double>(static_cast<float>(v));
  return out;
}

std::vector<std::uint8_t> encode(const WireMessage& msg) {
  const MessageKind kind = kind_of(msg);
  std::vector<std::uint8_t> payload;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Shutdown>) {
          return;
        } else {
          put_u8(payload, static_cast<std::uint8_t>(kind));
          if constexpr (std::is_same_v<T, Hello>) {
            put_be<std::uint32_t>(payload, m.client_id);
          } else if constexpr (std::is_same_v<T, GlobalWeights>) {
            put_be<std::uint32_t>(payload, m.round);
            encode_tensors(m.weights, payload);
          } else if constexpr (std::is_same_v<T, ClientUpdateMsg>) {
            put_be<std::uint32_t>(payload, m.round);
            put_be<std::uint32_t>(payload, m.client_id);
            put_be<std::uint64_t>(payload, m.n_samples);
            encode_tensors(m.weights, payload);
          } else if constexpr (std::is_same_v<T, RoundDone>) {
            put_be<std::uint32_t>(payload, m.round);
          }
        }
      },
      msg);
  if (payload.size() > kMaxPayload) throw WireError(WireErrorCode::Malformed, "payload too large");

  std::vector<std::uint8_t> frame;
  frame.reserve(kHeaderSize + payload.size() + kTrailerSize);
  for (auto b : kMagic) put_u8(frame, b);
  put_u8(frame, kWireVersion);
  put_u8(frame, static_cast<std::uint8_t>(kind));
  put_be<std::uint32_t>(frame, static_cast<std::uint32_t>(payload.size()));
  frame.insert(frame.end(), payload.begin(), payload.end());
  put_be<std::uint32_t>(frame, crc32(payload));
  return frame;
}

FrameHeader decode_header(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize)
    throw WireError(WireErrorCode::Truncated, "frame header needs " + std::to_string(kHeaderSize) +
                                                  " bytes, have " + std::to_string(header.size()));
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin()))
    throw WireError(WireErrorCode::BadMagic, "frame does not start with FSCL");
  if (header[4] != kWireVersion)
    throw WireError(WireErrorCode::VersionMismatch, "frame version " + std::to_string(header[4]) +
                                                        ", decoder supports " +
                                                        std::to_string(kWireVersion));
  if (!known_kind(header[5]))
    throw WireError(WireErrorCode::UnknownKind, "kind byte " + std::to_string(header[5]));
  const std::uint32_t length = (std::uint32_t{header[6]} << 24) | (std::uint32_t{header[7]} << 16) |
                               (std::uint32_t{header[8]} << 8) | std::uint32_t{header[9]};
  if (length > kMaxPayload) throw WireError(WireErrorCode::Malformed, "payload length too large");
  return FrameHeader{static_cast<MessageKind>(header[5]), length};
}

WireMessage decode(std::span<const std::uint8_t> bytes) {
  const FrameHeader h = decode_header(bytes);
  const std::size_t expected = kHeaderSize + std::size_t{h.payload_length} + kTrailerSize;
  if (bytes.size() < expected)
    throw WireError(WireErrorCode::Truncated, "frame needs " + std::to_string(expected) +
                                                  " bytes, have " + std::to_string(bytes.size()));
  if (bytes.size() > expected)
    throw WireError(WireErrorCode::TrailingBytes,
                    std::to_string(bytes.size() - expected) + " bytes after frame");

  std::span<const std::uint8_t> payload = bytes.subspan(kHeaderSize, h.payload_length);
  auto trailer = bytes.subspan(kHeaderSize + h.payload_length, kTrailerSize);
  const std::uint32_t stored = (std::uint32_t{trailer[0]} << 24) | (std::uint32_t{trailer[1]} << 16) |
                               (std::uint32_t{trailer[2]} << 8) | std::uint32_t{trailer[3]};
  if (stored != crc32(payload))
    throw WireError(WireErrorCode::ChecksumMismatch, "payload crc32 does not match trailer");

  if (h.kind == MessageKind::Shutdown) {
    if (!payload.empty()) throw WireError(WireErrorCode::Malformed, "Shutdown carries no payload");
    return Shutdown{};
  }
  Reader r(payload);
  if (payload.empty() || r.u8() != static_cast<std::uint8_t>(h.kind))
    throw WireError(WireErrorCode::Malformed, "payload kind does not match header kind");

  WireMessage msg;
  switch (h.kind) {
    case MessageKind::Hello:
      msg = Hello{r.be<std::uint32_t>()};
      break;
    case MessageKind::GlobalWeights: {
      GlobalWeights m;
      m.round = r.be<std::uint32_t>();
      m.weights = decode_tensors(payload);
      msg = std::move(m);
      break;
    }
    case MessageKind::ClientUpdate: {
      ClientUpdateMsg m;
      m.round = r.be<std::uint32_t>();
      m.client_id = r.be<std::uint32_t>();
      m.n_samples = r.be<std::uint64_t>();
      m.weights = decode_tensors(payload);
      msg = std::move(m);
      break;
    }
    case MessageKind::RoundDone:
      msg = RoundDone{r.be<std::uint32_t>()};
      break;
    case MessageKind::Shutdown:
      break;
  }
  if (!payload.empty())
    throw WireError(WireErrorCode::Malformed,
                    std::to_string(payload.size()) + " unread payload bytes");
  return msg;
}

}  // namespace fscl::transport
