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
// Wire messages exchanged by vendor, enclave host and user client. Framing
// is a 4-byte little-endian length prefix followed by a TLV body; every
// message carries the protocol version and an 8-byte session id. Tag
// tables live in docs/wire_format.md.

#ifndef OMG_MESSAGES_HPP_
#define OMG_MESSAGES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "omg/audio.hpp"
#include "omg/bytes.hpp"
#include "omg/container.hpp"
#include "omg/crypto.hpp"

namespace omg::proto {

inline constexpr uint8_t kProtocolVersion = 1;
inline constexpr uint32_t kMaxFrameBytes = 64u << 20;

using SessionId = std::array<uint8_t, 8>;

enum class MsgKind : uint8_t {
  kAttestReport = 1,    // enclave -> vendor (and -> user)
  kProvisionModel = 2,  // vendor -> enclave
  kAck = 3,             // vendor -> enclave (already provisioned / admin ok)
  kKeyRequest = 4,      // enclave -> vendor
  kKeyRelease = 5,      // vendor -> enclave
  kKeyDenied = 6,       // vendor -> enclave
  kQuery = 7,           // user -> enclave
  kResult = 8,          // enclave -> user
  kRevoke = 9,          // admin -> vendor
  kFeedPeripheral = 10, // fixture plumbing: load the simulated microphone
  kError = 11,
};

const char* msg_kind_name(MsgKind kind);

// (version, nonce) of the container the enclave already holds on untrusted
// storage; lets the vendor skip re-provisioning an unchanged model.
struct StoredContainerInfo {
  uint32_t model_version = 0;
  Nonce nonce{};
  bool operator==(const StoredContainerInfo&) const = default;
};

struct AttestReportMsg {
  crypto::AttestationReport report;
  std::optional<StoredContainerInfo> stored;
  bool operator==(const AttestReportMsg&) const = default;
};

struct ProvisionModelMsg {
  SealedModelContainer container;
  bool operator==(const ProvisionModelMsg&) const = default;
};

struct AckMsg {
  uint32_t model_version = 0;
  Nonce nonce{};
  std::string note;
  bool operator==(const AckMsg&) const = default;
};

struct KeyRequestMsg {
  Bytes enclave_pk;
  bool operator==(const KeyRequestMsg&) const = default;
};

struct KeyReleaseMsg {
  Bytes encrypted_key;  // K_U under the enclave's KEM key (hpke_seal)
  Nonce nonce{};
  uint32_t model_version = 0;
  bool operator==(const KeyReleaseMsg&) const = default;
};

struct KeyDeniedMsg {
  std::string reason;
  bool operator==(const KeyDeniedMsg&) const = default;
};

struct QueryMsg {
  bool from_peripheral = false;         // take the next clip from the mic
  std::optional<audio::AudioClip> clip; // or carry the clip inline
  bool operator==(const QueryMsg&) const = default;
};

struct ResultMsg {
  std::string label;
  float score = 0.0f;
  bool operator==(const ResultMsg&) const = default;
};

struct RevokeMsg {
  Bytes enclave_pk;
  bool operator==(const RevokeMsg&) const = default;
};

struct FeedPeripheralMsg {
  audio::AudioClip clip;
  bool operator==(const FeedPeripheralMsg&) const = default;
};

struct ErrorMsg {
  std::string code;  // an ErrorCode name, e.g. "license-denied"
  std::string detail;
  bool operator==(const ErrorMsg&) const = default;
};

using MessageBody =
    std::variant<AttestReportMsg, ProvisionModelMsg, AckMsg, KeyRequestMsg,
                 KeyReleaseMsg, KeyDeniedMsg, QueryMsg, ResultMsg, RevokeMsg,
                 FeedPeripheralMsg, ErrorMsg>;

struct ProtocolMessage {
  uint8_t version = kProtocolVersion;
  SessionId session{};
  MessageBody body;

  MsgKind kind() const {
    return static_cast<MsgKind>(body.index() + 1);
  }
  bool operator==(const ProtocolMessage&) const = default;
};

// Unframed canonical TLV body.
Bytes encode_message(const ProtocolMessage& msg);
ProtocolMessage decode_message(ByteSpan data);  // throws MalformedDataError

// Length-prefixed frame for stream transports.
Bytes frame_message(const ProtocolMessage& msg);

template <typename T>
ProtocolMessage make_message(const SessionId& session, T body) {
  ProtocolMessage msg;
  msg.session = session;
  msg.body = std::move(body);
  return msg;
}

}  // namespace omg::proto

#endif  // OMG_MESSAGES_HPP_
