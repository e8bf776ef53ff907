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
//
// Loopback stream transport: length-prefixed protocol messages over TCP,
// plus the vendor and enclave endpoints used by the CLI.

#ifndef OMG_NET_HPP_
#define OMG_NET_HPP_

#include <atomic>
#include <cstdint>
#include <list>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "omg/messages.hpp"
#include "omg/protocol.hpp"

namespace omg::net {

// "host:port" -> (host, port). Throws MalformedDataError.
std::pair<std::string, uint16_t> parse_address(const std::string& address);

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(const std::string& host, uint16_t port);

  void send_message(const proto::ProtocolMessage& msg);
  // nullopt on orderly peer close before a frame starts.
  std::optional<proto::ProtocolMessage> recv_message();

  proto::ProtocolMessage round_trip(const proto::ProtocolMessage& msg);

  bool valid() const { return fd_ >= 0; }
  // Unblocks any concurrent recv; the fd stays owned until close().
  void shutdown();
  void close();

 private:
  void send_all(ByteSpan data);
  bool recv_all(std::span<uint8_t> out);  // false on clean EOF at offset 0

  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  // port 0 binds an ephemeral port on 127.0.0.1.
  static TcpListener bind_loopback(uint16_t port);

  uint16_t port() const { return port_; }
  // nullopt once the listener is closed.
  std::optional<TcpStream> accept();
  void close();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

// Vendor over TCP, one thread per connection; each connection is its own
// session from the vendor's point of view.
class VendorEndpoint {
 public:
  VendorEndpoint(proto::Vendor& vendor, uint16_t port);
  ~VendorEndpoint();

  uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();

  proto::Vendor& vendor_;
  TcpListener listener_;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  // Streams stay owned here so stop() can shut them down to unblock the
  // session threads; they are destroyed only after the joins.
  std::list<TcpStream> session_streams_;
  std::vector<std::thread> sessions_;
  std::mutex sessions_mu_;
};

// VendorLink over a TCP connection (the enclave host's side).
class TcpVendorLink : public proto::VendorLink {
 public:
  TcpVendorLink(const std::string& host, uint16_t port);
  proto::ProtocolMessage round_trip(
      const proto::ProtocolMessage& request) override;

 private:
  TcpStream stream_;
  std::mutex mu_;
};

// Serves QUERY / FEED_PERIPHERAL from user clients against a prepared
// EnclaveHost. The query pipeline is serialized: one enclave, one core.
class EnclaveEndpoint {
 public:
  EnclaveEndpoint(proto::EnclaveHost& host, uint16_t port);
  ~EnclaveEndpoint();

  uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();
  proto::ProtocolMessage handle(const proto::ProtocolMessage& request);

  proto::EnclaveHost& host_;
  TcpListener listener_;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::list<TcpStream> session_streams_;
  std::vector<std::thread> sessions_;
  std::mutex sessions_mu_;
  std::mutex pipeline_mu_;
};

}  // namespace omg::net

#endif  // OMG_NET_HPP_
