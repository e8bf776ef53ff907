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

#include "omg/messages.hpp"

#include <cstring>

#include "omg/errors.hpp"
#include "omg/tlv.hpp"

namespace omg::proto {

namespace {

// Envelope tags.
enum : uint8_t {
  kTagVersion = 0x01,
  kTagSession = 0x02,
  kTagKind = 0x03,
  kTagPayload = 0x04,
};

// Payload tags, scoped per message kind.
enum : uint8_t {
  kTagA = 0x01,
  kTagB = 0x02,
  kTagC = 0x03,
};

Nonce nonce_from(const Bytes& b) {
  Nonce n{};
  if (b.size() != n.size()) throw MalformedDataError("nonce must be 16 bytes");
  std::memcpy(n.data(), b.data(), n.size());
  return n;
}

Bytes clip_samples_to_bytes(const audio::AudioClip& clip) {
  Bytes out;
  out.reserve(clip.samples.size() * 2);
  for (int16_t s : clip.samples) put_u16le(out, static_cast<uint16_t>(s));
  return out;
}

audio::AudioClip clip_from(uint32_t sample_rate, const Bytes& samples) {
  if (samples.size() % 2 != 0) {
    throw MalformedDataError("clip: odd sample byte count");
  }
  audio::AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(samples.size() / 2);
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = static_cast<int16_t>(get_u16le(samples, 2 * i));
  }
  return clip;
}

Bytes encode_payload(const MessageBody& body) {
  TlvWriter w;
  std::visit(
      [&w](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AttestReportMsg>) {
          w.add(kTagA, m.report.serialize());
          if (m.stored) {
            w.add_u32(kTagB, m.stored->model_version);
            w.add(kTagC, m.stored->nonce);
          }
        } else if constexpr (std::is_same_v<T, ProvisionModelMsg>) {
          w.add(kTagA, m.container.serialize());
        } else if constexpr (std::is_same_v<T, AckMsg>) {
          w.add_u32(kTagA, m.model_version);
          w.add(kTagB, m.nonce);
          w.add_string(kTagC, m.note);
        } else if constexpr (std::is_same_v<T, KeyRequestMsg>) {
          w.add(kTagA, m.enclave_pk);
        } else if constexpr (std::is_same_v<T, KeyReleaseMsg>) {
          w.add(kTagA, m.encrypted_key);
          w.add(kTagB, m.nonce);
          w.add_u32(kTagC, m.model_version);
        } else if constexpr (std::is_same_v<T, KeyDeniedMsg>) {
          w.add_string(kTagA, m.reason);
        } else if constexpr (std::is_same_v<T, QueryMsg>) {
          w.add_u8(kTagA, m.from_peripheral ? 1 : 0);
          if (m.clip) {
            w.add_u32(kTagB, m.clip->sample_rate);
            w.add(kTagC, clip_samples_to_bytes(*m.clip));
          }
        } else if constexpr (std::is_same_v<T, ResultMsg>) {
          w.add_string(kTagA, m.label);
          uint32_t bits;
          std::memcpy(&bits, &m.score, 4);
          w.add_u32(kTagB, bits);
        } else if constexpr (std::is_same_v<T, RevokeMsg>) {
          w.add(kTagA, m.enclave_pk);
        } else if constexpr (std::is_same_v<T, FeedPeripheralMsg>) {
          w.add_u32(kTagA, m.clip.sample_rate);
          w.add(kTagB, clip_samples_to_bytes(m.clip));
        } else if constexpr (std::is_same_v<T, ErrorMsg>) {
          w.add_string(kTagA, m.code);
          w.add_string(kTagB, m.detail);
        }
      },
      body);
  return w.take();
}

MessageBody decode_payload(MsgKind kind, ByteSpan payload) {
  TlvReader r(payload);
  switch (kind) {
    case MsgKind::kAttestReport: {
      AttestReportMsg m;
      m.report = crypto::AttestationReport::parse(r.expect(kTagA));
      uint32_t version = 0;
      if (r.maybe_u32(kTagB, &version)) {
        StoredContainerInfo stored;
        stored.model_version = version;
        stored.nonce = nonce_from(r.expect_len(kTagC, 16));
        m.stored = stored;
      }
      r.finish();
      return m;
    }
    case MsgKind::kProvisionModel: {
      ProvisionModelMsg m;
      m.container = SealedModelContainer::parse(r.expect(kTagA));
      r.finish();
      return m;
    }
    case MsgKind::kAck: {
      AckMsg m;
      m.model_version = r.expect_u32(kTagA);
      m.nonce = nonce_from(r.expect_len(kTagB, 16));
      m.note = r.expect_string(kTagC);
      r.finish();
      return m;
    }
    case MsgKind::kKeyRequest: {
      KeyRequestMsg m;
      m.enclave_pk = r.expect_len(kTagA, crypto::kPublicIdLen);
      r.finish();
      return m;
    }
    case MsgKind::kKeyRelease: {
      KeyReleaseMsg m;
      m.encrypted_key = r.expect(kTagA);
      m.nonce = nonce_from(r.expect_len(kTagB, 16));
      m.model_version = r.expect_u32(kTagC);
      r.finish();
      return m;
    }
    case MsgKind::kKeyDenied: {
      KeyDeniedMsg m;
      m.reason = r.expect_string(kTagA);
      r.finish();
      return m;
    }
    case MsgKind::kQuery: {
      QueryMsg m;
      m.from_peripheral = r.expect_u8(kTagA) != 0;
      if (!r.done()) {
        uint32_t rate = r.expect_u32(kTagB);
        m.clip = clip_from(rate, r.expect(kTagC));
      }
      r.finish();
      return m;
    }
    case MsgKind::kResult: {
      ResultMsg m;
      m.label = r.expect_string(kTagA);
      uint32_t bits = r.expect_u32(kTagB);
      std::memcpy(&m.score, &bits, 4);
      r.finish();
      return m;
    }
    case MsgKind::kRevoke: {
      RevokeMsg m;
      m.enclave_pk = r.expect_len(kTagA, crypto::kPublicIdLen);
      r.finish();
      return m;
    }
    case MsgKind::kFeedPeripheral: {
      FeedPeripheralMsg m;
      uint32_t rate = r.expect_u32(kTagA);
      m.clip = clip_from(rate, r.expect(kTagB));
      r.finish();
      return m;
    }
    case MsgKind::kError: {
      ErrorMsg m;
      m.code = r.expect_string(kTagA);
      m.detail = r.expect_string(kTagB);
      r.finish();
      return m;
    }
  }
  throw MalformedDataError("message: unknown kind");
}

}  // namespace

const char* msg_kind_name(MsgKind kind) {
  switch (kind) {
    case MsgKind::kAttestReport: return "ATTEST_REPORT";
    case MsgKind::kProvisionModel: return "PROVISION_MODEL";
    case MsgKind::kAck: return "ACK";
    case MsgKind::kKeyRequest: return "KEY_REQUEST";
    case MsgKind::kKeyRelease: return "KEY_RELEASE";
    case MsgKind::kKeyDenied: return "KEY_DENIED";
    case MsgKind::kQuery: return "QUERY";
    case MsgKind::kResult: return "RESULT";
    case MsgKind::kRevoke: return "REVOKE";
    case MsgKind::kFeedPeripheral: return "FEED_PERIPHERAL";
    case MsgKind::kError: return "ERROR";
  }
  return "?";
}

Bytes encode_message(const ProtocolMessage& msg) {
  TlvWriter w;
  w.add_u8(kTagVersion, msg.version);
  w.add(kTagSession, msg.session);
  w.add_u8(kTagKind, static_cast<uint8_t>(msg.kind()));
  w.add(kTagPayload, encode_payload(msg.body));
  return w.take();
}

ProtocolMessage decode_message(ByteSpan data) {
  TlvReader r(data);
  ProtocolMessage msg;
  msg.version = r.expect_u8(kTagVersion);
  if (msg.version != kProtocolVersion) {
    throw MalformedDataError("message: unsupported protocol version " +
                             std::to_string(msg.version));
  }
  Bytes session = r.expect_len(kTagSession, msg.session.size());
  std::memcpy(msg.session.data(), session.data(), session.size());
  uint8_t kind = r.expect_u8(kTagKind);
  if (kind < 1 || kind > 11) {
    throw MalformedDataError("message: unknown kind " + std::to_string(kind));
  }
  Bytes payload = r.expect(kTagPayload);
  r.finish();
  msg.body = decode_payload(static_cast<MsgKind>(kind), payload);
  return msg;
}

Bytes frame_message(const ProtocolMessage& msg) {
  Bytes body = encode_message(msg);
  Bytes out;
  out.reserve(4 + body.size());
  put_u32le(out, static_cast<uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

}  // namespace omg::proto
