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

#include "fscl/transport/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>

namespace fscl::transport {
namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class MemoryStream final : public ByteStream {
 public:
  MemoryStream(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryStream() override { close(); }

  void write_all(std::span<const std::uint8_t> data) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw WireError(WireErrorCode::Closed, "write to closed in-memory channel");
    out_->bytes.insert(out_->bytes.end(), data.begin(), data.end());
    out_->cv.notify_all();
  }

  std::size_t read_some(std::span<std::uint8_t> buffer) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
    const std::size_t n = std::min(buffer.size(), in_->bytes.size());
    std::copy_n(in_->bytes.begin(), n, buffer.begin());
    in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close() override {
    for (auto* pipe : {in_.get(), out_.get()}) {
      std::lock_guard lock(pipe->mu);
      pipe->closed = true;
      pipe->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

[[noreturn]] void throw_errno(WireErrorCode code, const std::string& what) {
  throw WireError(code, what + ": " + std::strerror(errno));
}

class TcpStream final : public ByteStream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpStream() override {
    close();
    ::close(fd_);
  }

  void write_all(std::span<const std::uint8_t> data) override {
    while (!data.empty()) {
      const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno(WireErrorCode::Io, "send");
      }
      data = data.subspan(static_cast<std::size_t>(n));
    }
  }

  std::size_t read_some(std::span<std::uint8_t> buffer) override {
    for (;;) {
      const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      if (errno == ECONNRESET || errno == ENOTCONN) return 0;
      throw_errno(WireErrorCode::Io, "recv");
    }
  }

  void close() override { ::shutdown(fd_, SHUT_RDWR); }

 private:
  int fd_;
};

// Fills `buffer` completely; returns bytes read before end of stream.
std::size_t read_fully(ByteStream& stream, std::span<std::uint8_t> buffer) {
  std::size_t got = 0;
  while (got < buffer.size()) {
    const std::size_t n = stream.read_some(buffer.subspan(got));
    if (n == 0) break;
    got += n;
  }
  return got;
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw WireError(WireErrorCode::Io, "not an IPv4 address: " + host);
  return addr;
}

}  // namespace

Channel::Channel(std::unique_ptr<ByteStream> stream)
    : stream_(std::move(stream)),
      send_mu_(std::make_unique<std::mutex>()),
      recv_mu_(std::make_unique<std::mutex>()) {}

Channel::Channel(Channel&&) noexcept = default;
Channel& Channel::operator=(Channel&&) noexcept = default;
Channel::~Channel() = default;

void Channel::send(const WireMessage& msg) {
  const auto frame = encode(msg);
  send_raw(frame);
}

void Channel::send_raw(std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(*send_mu_);
  stream_->write_all(bytes);
}

std::optional<WireMessage> Channel::recv() {
  std::lock_guard lock(*recv_mu_);
  std::vector<std::uint8_t> frame(kHeaderSize);
  const std::size_t got = read_fully(*stream_, frame);
  if (got == 0) return std::nullopt;
  if (got < kHeaderSize)
    throw WireError(WireErrorCode::Truncated, "stream ended inside a frame header");
  const FrameHeader header = decode_header(frame);
  const std::size_t rest = std::size_t{header.payload_length} + kTrailerSize;
  frame.resize(kHeaderSize + rest);
  if (read_fully(*stream_, std::span(frame).subspan(kHeaderSize)) < rest)
    throw WireError(WireErrorCode::Truncated, "stream ended inside a frame body");
  return decode(frame);
}

void Channel::close() {
  if (stream_) stream_->close();
}

std::pair<Channel, Channel> channel_pair() {
  auto a_to_b = std::make_shared<Pipe>();
  auto b_to_a = std::make_shared<Pipe>();
  return {Channel(std::make_unique<MemoryStream>(b_to_a, a_to_b)),
          Channel(std::make_unique<MemoryStream>(a_to_b, b_to_a))};
}

TcpListener TcpListener::listen(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw_errno(WireErrorCode::Io, "socket");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 64) < 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    throw_errno(WireErrorCode::Io, "bind/listen " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return TcpListener(fd, ntohs(addr.sin_port));
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    port_ = other.port_;
  }
  return *this;
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

Channel TcpListener::accept() {
  for (;;) {
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) return Channel(std::make_unique<TcpStream>(fd));
    if (errno == EINTR) continue;
    throw_errno(WireErrorCode::Io, "accept");
  }
}

Channel tcp_connect(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw_errno(WireErrorCode::Io, "socket");
  sockaddr_in addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    throw_errno(saved == ECONNREFUSED ? WireErrorCode::ConnectionRefused : WireErrorCode::Io,
                "connect " + host + ":" + std::to_string(port));
  }
  return Channel(std::make_unique<TcpStream>(fd));
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw WireError(WireErrorCode::Io, "expected host:port, got '" + address + "'");
  const std::string port_text = address.substr(colon + 1);
  std::size_t used = 0;
  unsigned long port = 0;
  try {
    port = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || port > 0xFFFF)
    throw WireError(WireErrorCode::Io, "invalid port in '" + address + "'");
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace fscl::transport
