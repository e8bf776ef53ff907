// Copyright 2026 The Offline Model Guard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "omg/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "omg/errors.hpp"
#include "omg/tlv.hpp"

namespace omg::net {

namespace {

[[noreturn]] void fail_errno(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

}  // namespace

std::pair<std::string, uint16_t> parse_address(const std::string& address) {
  size_t colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 ||
      colon + 1 >= address.size()) {
    throw MalformedDataError("address must be host:port, got " + address);
  }
  unsigned long port = 0;
  try {
    port = std::stoul(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw MalformedDataError("bad port in " + address);
  }
  if (port > 65535) throw MalformedDataError("port out of range in " + address);
  return {address.substr(0, colon), static_cast<uint16_t>(port)};
}

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) {
  other.fd_ = -1;
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpStream::connect(const std::string& host, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail_errno("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw TransportError("bad IPv4 address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int saved = errno;
    ::close(fd);
    errno = saved;
    fail_errno("connect " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

void TcpStream::send_all(ByteSpan data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent,
                       MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_errno("send");
    }
    sent += static_cast<size_t>(n);
  }
}

bool TcpStream::recv_all(std::span<uint8_t> out) {
  size_t got = 0;
  while (got < out.size()) {
    ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_errno("recv");
    }
    if (n == 0) {
      if (got == 0) return false;  // clean EOF between frames
      throw TransportError("peer closed mid-frame");
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

void TcpStream::send_message(const proto::ProtocolMessage& msg) {
  if (fd_ < 0) throw TransportError("send on closed stream");
  send_all(proto::frame_message(msg));
}

std::optional<proto::ProtocolMessage> TcpStream::recv_message() {
  if (fd_ < 0) throw TransportError("recv on closed stream");
  std::array<uint8_t, 4> len_bytes{};
  if (!recv_all(len_bytes)) return std::nullopt;
  uint32_t len = get_u32le(len_bytes, 0);
  if (len > proto::kMaxFrameBytes) {
    throw TransportError("frame too large: " + std::to_string(len));
  }
  Bytes body(len);
  if (!recv_all(body)) throw TransportError("peer closed mid-frame");
  return proto::decode_message(body);
}

proto::ProtocolMessage TcpStream::round_trip(
    const proto::ProtocolMessage& msg) {
  send_message(msg);
  auto response = recv_message();
  if (!response) throw TransportError("peer closed before responding");
  return *response;
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
  other.port_ = 0;
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
    other.port_ = 0;
  }
  return *this;
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

TcpListener TcpListener::bind_loopback(uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail_errno("socket");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int saved = errno;
    ::close(fd);
    errno = saved;
    fail_errno("bind 127.0.0.1:" + std::to_string(port));
  }
  if (::listen(fd, 16) != 0) {
    int saved = errno;
    ::close(fd);
    errno = saved;
    fail_errno("listen");
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    int saved = errno;
    ::close(fd);
    errno = saved;
    fail_errno("getsockname");
  }
  TcpListener listener;
  listener.fd_ = fd;
  listener.port_ = ntohs(addr.sin_port);
  return listener;
}

std::optional<TcpStream> TcpListener::accept() {
  if (fd_ < 0) return std::nullopt;
  int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) {
    if (errno == EINTR) return accept();
    return std::nullopt;  // listener closed
  }
  int one = 1;
  ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(client);
}

// ---------------------------------------------------------------------------
// Endpoints.

VendorEndpoint::VendorEndpoint(proto::Vendor& vendor, uint16_t port)
    : vendor_(vendor) {
  listener_ = TcpListener::bind_loopback(port);
  port_ = listener_.port();
  accept_thread_ = std::thread([this] { serve(); });
}

VendorEndpoint::~VendorEndpoint() { stop(); }

void VendorEndpoint::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(sessions_mu_);
    for (TcpStream& s : session_streams_) s.shutdown();
    sessions.swap(sessions_);
  }
  for (std::thread& t : sessions) {
    if (t.joinable()) t.join();
  }
  std::lock_guard lock(sessions_mu_);
  session_streams_.clear();
}

void VendorEndpoint::serve() {
  while (!stopping_) {
    auto stream = listener_.accept();
    if (!stream) break;
    std::lock_guard lock(sessions_mu_);
    session_streams_.push_back(std::move(*stream));
    TcpStream* s = &session_streams_.back();
    sessions_.emplace_back([this, s] {
      try {
        while (true) {
          auto request = s->recv_message();
          if (!request) break;
          s->send_message(vendor_.handle(*request));
        }
      } catch (const Error&) {
        // Drop the connection; the client sees a transport error.
      }
    });
  }
}

TcpVendorLink::TcpVendorLink(const std::string& host, uint16_t port)
    : stream_(TcpStream::connect(host, port)) {}

proto::ProtocolMessage TcpVendorLink::round_trip(
    const proto::ProtocolMessage& request) {
  std::lock_guard lock(mu_);
  return stream_.round_trip(request);
}

EnclaveEndpoint::EnclaveEndpoint(proto::EnclaveHost& host, uint16_t port)
    : host_(host) {
  listener_ = TcpListener::bind_loopback(port);
  port_ = listener_.port();
  accept_thread_ = std::thread([this] { serve(); });
}

EnclaveEndpoint::~EnclaveEndpoint() { stop(); }

void EnclaveEndpoint::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(sessions_mu_);
    for (TcpStream& s : session_streams_) s.shutdown();
    sessions.swap(sessions_);
  }
  for (std::thread& t : sessions) {
    if (t.joinable()) t.join();
  }
  std::lock_guard lock(sessions_mu_);
  session_streams_.clear();
}

void EnclaveEndpoint::serve() {
  while (!stopping_) {
    auto stream = listener_.accept();
    if (!stream) break;
    std::lock_guard lock(sessions_mu_);
    session_streams_.push_back(std::move(*stream));
    TcpStream* s = &session_streams_.back();
    sessions_.emplace_back([this, s] {
      try {
        while (true) {
          auto request = s->recv_message();
          if (!request) break;
          s->send_message(handle(*request));
        }
      } catch (const Error&) {
      }
    });
  }
}

proto::ProtocolMessage EnclaveEndpoint::handle(
    const proto::ProtocolMessage& request) {
  std::lock_guard lock(pipeline_mu_);
  try {
    switch (request.kind()) {
      case proto::MsgKind::kQuery: {
        const auto& q = std::get<proto::QueryMsg>(request.body);
        proto::ResultMsg result =
            q.from_peripheral ? host_.query_peripheral()
            : q.clip          ? host_.query_clip(*q.clip)
                              : throw MalformedDataError(
                                    "query carries no audio");
        return proto::make_message(request.session, result);
      }
      case proto::MsgKind::kFeedPeripheral: {
        host_.feed_peripheral(
            std::get<proto::FeedPeripheralMsg>(request.body).clip);
        return proto::make_message(request.session,
                                   proto::AckMsg{0, {}, "peripheral-fed"});
      }
      default:
        return proto::make_message(
            request.session,
            proto::ErrorMsg{error_code_name(ErrorCode::kMalformedData),
                            std::string("unexpected message: ") +
                                proto::msg_kind_name(request.kind())});
    }
  } catch (const Error& e) {
    return proto::make_message(
        request.session, proto::ErrorMsg{error_code_name(e.code()), e.what()});
  }
}

}  // namespace omg::net
