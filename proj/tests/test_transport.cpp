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

#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "fscl/nn/model.hpp"
#include "fscl/transport/channel.hpp"
#include "fscl/transport/checkpoint.hpp"
#include "fscl/transport/wire.hpp"
#include "support.hpp"

namespace fscl::transport {
namespace {

using nn::ParamSet;

// Values drawn as floats so they survive the 32-bit wire exactly.
ParamSet random_params(std::mt19937_64& rng) {
  static const char* kNames[] = {"gru1/W_z", "gru1/b_z", "bn/gamma", "bn/running_var",
                                 "dense1/weight", "dense2/bias", "x/U_h"};
  std::normal_distribution<float> normal(0.0f, 3.0f);
  ParamSet p;
  const std::size_t n = rng() % 5;
  for (std::size_t i = 0; i < n; ++i) {
    std::string name = kNames[rng() % std::size(kNames)];
    name += std::to_string(i);
    std::vector<std::uint32_t> shape;
    const std::size_t rank = rng() % 3;
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::uint32_t>(1 + rng() % 6));
    auto& t = p.add(name, shape, nn::infer_kind(name));
    for (double& v : t.values) v = static_cast<double>(normal(rng));
  }
  return p;
}

WireMessage random_message(std::mt19937_64& rng) {
  switch (rng() % 5) {
    case 0:
      return Hello{static_cast<std::uint32_t>(rng())};
    case 1:
      return GlobalWeights{static_cast<std::uint32_t>(rng()), random_params(rng)};
    case 2:
      return ClientUpdateMsg{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                             rng(), random_params(rng)};
    case 3:
      return RoundDone{static_cast<std::uint32_t>(rng())};
    default:
      return Shutdown{};
  }
}

WireErrorCode decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode(bytes);
  } catch (const WireError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode accepted a corrupted frame";
  return WireErrorCode::Io;
}

TEST(Wire, ShutdownFrameBytes) {
  const auto bytes = encode(Shutdown{});
  // magic, version, kind, u32 length 0, crc32 of nothing (= 0)
  const std::vector<std::uint8_t> expected = {0x46, 0x53, 0x43, 0x4C, 0x01, 0x05, 0x00,
                                              0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  EXPECT_EQ(bytes, expected);
  EXPECT_EQ(bytes.size(), kHeaderSize + kTrailerSize);
  EXPECT_EQ(decode(bytes), WireMessage{Shutdown{}});
}

TEST(Wire, HelloLayout) {
  const auto bytes = encode(Hello{0x01020304});
  ASSERT_EQ(bytes.size(), 10u + 5u + 4u);
  EXPECT_EQ(bytes[9], 5);    // payload length, low byte
  EXPECT_EQ(bytes[10], 1);   // kind echo
  EXPECT_EQ(bytes[11], 1);   // client id, big-endian
  EXPECT_EQ(bytes[14], 4);
  const std::uint32_t crc = crc32(std::span(bytes).subspan(10, 5));
  EXPECT_EQ(bytes[15], crc >> 24);
  EXPECT_EQ(bytes[18], crc & 0xFF);
}

TEST(Wire, Crc32CheckValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())),
            0xCBF43926u);
}

TEST(Wire, TensorDataIsLittleEndianFloat) {
  ParamSet p;
  p.add("d/bias", {1}, nn::ParamKind::Bias).values = {1.0};
  std::vector<std::uint8_t> out;
  encode_tensors(p, out);
  // u16 count, u16 name length, name, u8 rank, u32 dim, f32
  ASSERT_EQ(out.size(), 2u + 2u + 6u + 1u + 4u + 4u);
  const std::vector<std::uint8_t> one = {0x00, 0x00, 0x80, 0x3F};
  EXPECT_EQ(std::vector<std::uint8_t>(out.end() - 4, out.end()), one);
}

TEST(Wire, RandomizedRoundTrips) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto msg = random_message(rng);
    const auto bytes = encode(msg);
    const auto back = decode(bytes);
    ASSERT_EQ(back, msg) << "iteration " << i;
    ASSERT_EQ(kind_of(back), kind_of(msg));
  }
}

TEST(Wire, DoublePrecisionIsRoundedToFloat) {
  ParamSet p;
  p.add("a/weight", {2}, nn::ParamKind::Weight).values = {0.1, 1.0 / 3.0};
  const auto got = std::get<GlobalWeights>(decode(encode(GlobalWeights{1, p}))).weights;
  EXPECT_EQ(got, quantize_f32(p));
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_NEAR(got[0].values[i], p[0].values[i], 1e-7 * std::abs(p[0].values[i]));
}

TEST(Wire, EverySingleByteCorruptionDetected) {
  std::mt19937_64 rng(7);
  ParamSet p;
  for (std::size_t i = 0; i < 3; ++i) p = random_params(rng);
  const std::vector<WireMessage> messages = {Hello{3}, RoundDone{9}, Shutdown{},
                                             GlobalWeights{2, p},
                                             ClientUpdateMsg{2, 4, 1234, p}};
  for (const auto& msg : messages) {
    const auto bytes = encode(msg);
    for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
      for (int mask = 1; mask < 256; mask += (bytes.size() > 64 ? 37 : 1)) {
        auto bad = bytes;
        bad[pos] ^= static_cast<std::uint8_t>(mask);
        try {
          decode(bad);
          FAIL() << "undetected corruption at byte " << pos << " mask " << mask;
        } catch (const WireError&) {
        }
      }
    }
  }
}

TEST(Wire, DistinctErrorCodes) {
  auto bytes = encode(RoundDone{5});
  auto truncated = bytes;
  truncated.pop_back();
  auto magic = bytes;
  magic[0] = 'X';
  auto version = bytes;
  version[4] = kWireVersion + 1;
  auto kind = bytes;
  kind[5] = 0x7F;
  auto payload = bytes;
  payload[12] ^= 0x10;
  auto trailing = bytes;
  trailing.push_back(0);

  EXPECT_EQ(decode_error(truncated), WireErrorCode::Truncated);
  EXPECT_EQ(decode_error(magic), WireErrorCode::BadMagic);
  EXPECT_EQ(decode_error(version), WireErrorCode::VersionMismatch);
  EXPECT_EQ(decode_error(kind), WireErrorCode::UnknownKind);
  EXPECT_EQ(decode_error(payload), WireErrorCode::ChecksumMismatch);
  EXPECT_EQ(decode_error(trailing), WireErrorCode::TrailingBytes);
  EXPECT_EQ(decode_error(std::span(bytes).first(3)), WireErrorCode::Truncated);
}

TEST(Wire, NextVersionFrameRejectedCleanly) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    auto bytes = encode(random_message(rng));
    bytes[4] = kWireVersion + 1;
    EXPECT_EQ(decode_error(bytes), WireErrorCode::VersionMismatch);
    EXPECT_THROW(decode_header(std::span(bytes).first(kHeaderSize)), WireError);
  }
}

// Behavioral contract shared by every transport.
class ChannelContract : public ::testing::TestWithParam<std::string> {
 protected:
  std::pair<Channel, Channel> make_pair() {
    if (GetParam() == "memory") return channel_pair();
    auto listener = TcpListener::listen("127.0.0.1", 0);
    std::optional<Channel> server;
    std::thread t([&] { server.emplace(listener.accept()); });
    Channel client = tcp_connect("127.0.0.1", listener.port());
    t.join();
    return {std::move(client), std::move(*server)};
  }
};

TEST_P(ChannelContract, SendThenReceive) {
  auto [a, b] = make_pair();
  a.send(Hello{7});
  EXPECT_EQ(b.recv(), WireMessage{Hello{7}});
  b.send(RoundDone{1});
  EXPECT_EQ(a.recv(), WireMessage{RoundDone{1}});
}

TEST_P(ChannelContract, FifoOrderAcrossThreads) {
  auto [a, b] = make_pair();
  std::mt19937_64 rng(9);
  std::vector<WireMessage> sent;
  for (int i = 0; i < 200; ++i) sent.push_back(random_message(rng));
  std::thread writer([&, &a = a] {
    for (const auto& m : sent) a.send(m);
  });
  for (const auto& m : sent) {
    const auto got = b.recv();
    ASSERT_TRUE(got.has_value());
    EXPECT_EQ(*got, m);
  }
  writer.join();
}

TEST_P(ChannelContract, LargeMessage) {
  auto [a, b] = make_pair();
  ParamSet p;
  auto& t = p.add("big/weight", {512, 512}, nn::ParamKind::Weight);
  for (std::size_t i = 0; i < t.numel(); ++i) t.values[i] = static_cast<double>(i % 1000) * 0.25;
  std::thread writer([&, &a = a] { a.send(GlobalWeights{3, p}); });
  const auto got = b.recv();
  writer.join();
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(std::get<GlobalWeights>(*got).weights, p);
}

TEST_P(ChannelContract, CleanCloseYieldsNothing) {
  auto [a, b] = make_pair();
  a.send(RoundDone{2});
  a.close();
  EXPECT_EQ(b.recv(), WireMessage{RoundDone{2}});
  EXPECT_EQ(b.recv(), std::nullopt);
}

TEST_P(ChannelContract, CloseMidFrameIsTruncated) {
  for (std::size_t cut : {std::size_t{3}, std::size_t{12}}) {
    auto [a, b] = make_pair();
    const auto bytes = encode(Hello{1});
    a.send_raw(std::span(bytes).first(cut));
    a.close();
    try {
      b.recv();
      FAIL() << "expected a truncated frame error";
    } catch (const WireError& e) {
      EXPECT_EQ(e.code(), WireErrorCode::Truncated);
    }
  }
}

TEST_P(ChannelContract, CorruptFrameRejected) {
  auto [a, b] = make_pair();
  auto bytes = encode(RoundDone{4});
  bytes[11] ^= 0xFF;
  a.send_raw(bytes);
  try {
    b.recv();
    FAIL();
  } catch (const WireError& e) {
    EXPECT_EQ(e.code(), WireErrorCode::ChecksumMismatch);
  }
}

TEST_P(ChannelContract, BlockedReaderWakesOnClose) {
  auto [a, b] = make_pair();
  std::optional<WireMessage> got = RoundDone{0};
  std::thread reader([&, &b = b] { got = b.recv(); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  a.close();
  reader.join();
  EXPECT_EQ(got, std::nullopt);
}

INSTANTIATE_TEST_SUITE_P(Transports, ChannelContract, ::testing::Values("memory", "tcp"),
                         [](const auto& info) { return info.param; });

TEST(Tcp, ConnectionRefused) {
  std::uint16_t port;
  {
    auto listener = TcpListener::listen("127.0.0.1", 0);
    port = listener.port();
  }
  try {
    tcp_connect("127.0.0.1", port);
    FAIL();
  } catch (const WireError& e) {
    EXPECT_EQ(e.code(), WireErrorCode::ConnectionRefused);
  }
}

TEST(Tcp, ParseAddress) {
  EXPECT_EQ(parse_address("127.0.0.1:8080"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8080}));
  EXPECT_THROW(parse_address("localhost"), WireError);
  EXPECT_THROW(parse_address("1.2.3.4:99999"), WireError);
}

TEST(Checkpoint, RoundTripAndArchitectureCheck) {
  testing::TempDir dir;
  nn::ModelConfig cfg;
  cfg.input_dim = 12;
  const auto params = nn::init_params(cfg, 5);
  save_checkpoint(dir / "m.fscp", params, 6, cfg);
  const auto ck = load_checkpoint(dir / "m.fscp", cfg);
  EXPECT_EQ(ck.round, 6u);
  EXPECT_EQ(ck.params, quantize_f32(params));

  auto other = cfg;
  other.gru1_units = 8;
  EXPECT_THROW(load_checkpoint(dir / "m.fscp", other), Error);
  EXPECT_THROW(load_checkpoint(dir / "missing.fscp", cfg), Error);
}

}  // namespace
}  // namespace fscl::transport
