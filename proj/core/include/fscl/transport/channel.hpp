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

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "fscl/transport/wire.hpp"

namespace fscl::transport {

// Reliable ordered byte stream. read_some returns 0 at end of stream.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
  // Ends the stream in both directions; a blocked reader on either side wakes.
  virtual void close() = 0;
};

// Message endpoint over a byte stream. send and recv may be called from
// different threads; concurrent sends (or recvs) are serialized.
class Channel {
 public:
  explicit Channel(std::unique_ptr<ByteStream> stream);
  Channel(Channel&&) noexcept;
  Channel& operator=(Channel&&) noexcept;
  ~Channel();

  void send(const WireMessage& msg);
  // nullopt when the peer closed cleanly between frames; throws
  // WireError(Truncated) when the stream ends inside a frame.
  std::optional<WireMessage> recv();
  void close();

  // Writes arbitrary bytes; used to exercise partial frames.
  void send_raw(std::span<const std::uint8_t> bytes);

 private:
  std::unique_ptr<ByteStream> stream_;
  std::unique_ptr<std::mutex> send_mu_;
  std::unique_ptr<std::mutex> recv_mu_;
};

// Two connected in-process endpoints.
std::pair<Channel, Channel> channel_pair();

class TcpListener {
 public:
  // host is a dotted IPv4 address; port 0 picks an ephemeral port.
  static TcpListener listen(const std::string& host, std::uint16_t port);

  TcpListener(TcpListener&&) noexcept;
  TcpListener& operator=(TcpListener&&) noexcept;
  ~TcpListener();

  std::uint16_t port() const noexcept { return port_; }
  Channel accept();

 private:
  TcpListener(int fd, std::uint16_t port) : fd_(fd), port_(port) {}
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

Channel tcp_connect(const std::string& host, std::uint16_t port);

// "host:port" -> (host, port).
std::pair<std::string, std::uint16_t> parse_address(const std::string& address);

}  // namespace fscl::transport
