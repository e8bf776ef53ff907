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
// Key material, measurement, attestation, key derivation and authenticated
// encryption. Primitives: SHA-256, HKDF-SHA256, AES-256-GCM, Ed25519
// signatures and X25519 key agreement (all via OpenSSL libcrypto).
//
// An enclave identity signs attestation reports with Ed25519 and receives
// key material via X25519-based hybrid encryption, so its public identity
// carries both raw public keys: sign_pk (32 bytes) followed by kem_pk
// (32 bytes), 64 bytes total.

#ifndef OMG_CRYPTO_HPP_
#define OMG_CRYPTO_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "omg/bytes.hpp"
#include "omg/container.hpp"
#include "omg/rng.hpp"

namespace omg::crypto {

inline constexpr size_t kDigestLen = 32;
inline constexpr size_t kRawKeyLen = 32;
inline constexpr size_t kSignatureLen = 64;
inline constexpr size_t kPublicIdLen = 2 * kRawKeyLen;
inline constexpr std::string_view kModelKeyInfo = "OMG-model-key-v1";
inline constexpr std::string_view kKeyReleaseInfo = "OMG-key-release-v1";

// -------------------------------------------------------------------------
// Primitives.

Bytes sha256(ByteSpan data);

// RFC 5869 HKDF with SHA-256.
Bytes hkdf_sha256(ByteSpan ikm, ByteSpan salt, ByteSpan info, size_t out_len);

struct AeadSealed {
  Bytes ciphertext;
  std::array<uint8_t, kAeadTagLen> tag{};
};

// AES-256-GCM. `key` is 32 bytes, `iv` 12 bytes.
AeadSealed aead_seal(ByteSpan key, ByteSpan iv, ByteSpan plaintext,
                     ByteSpan aad);
std::optional<Bytes> aead_open(ByteSpan key, ByteSpan iv, ByteSpan ciphertext,
                               ByteSpan tag, ByteSpan aad);

Bytes ed25519_public_from_seed(ByteSpan seed);
Bytes ed25519_sign(ByteSpan seed, ByteSpan message);
bool ed25519_verify(ByteSpan public_key, ByteSpan message, ByteSpan signature);

Bytes x25519_public_from_seed(ByteSpan seed);
Bytes x25519_shared_secret(ByteSpan my_seed, ByteSpan peer_public);

// -------------------------------------------------------------------------
// Domain types.

struct Measurement {
  std::array<uint8_t, kDigestLen> digest{};

  Bytes to_bytes() const { return Bytes(digest.begin(), digest.end()); }
  static Measurement from_bytes(ByteSpan b);
  std::string hex() const { return hex_encode(digest); }
  bool operator==(const Measurement&) const = default;
};

// Minimal self-describing certificate. Not X.509; the TLV layout is
// documented byte-exactly in docs/wire_format.md.
struct Certificate {
  std::string subject;
  std::string scheme = "ed25519";
  Bytes sign_pk;                          // 32 bytes
  Bytes kem_pk;                           // 32 bytes, empty for roots
  std::optional<Measurement> measurement; // present in enclave certs
  std::string issuer;
  Bytes signature;                        // 64 bytes, by the issuer key

  Bytes tbs_bytes() const;  // all fields except the signature
  Bytes serialize() const;
  static Certificate parse(ByteSpan data);

  // Signature check under `issuer_sign_pk`. For self-signed roots pass the
  // certificate's own key.
  bool verify_signature(ByteSpan issuer_sign_pk) const;
  bool operator==(const Certificate&) const = default;
};

// Device-vendor trust root: a self-signed certificate plus the signing seed.
struct PlatformIdentity {
  Certificate platform_cert;
  SecretBytes signing_seed;  // 32 bytes, never leaves the platform
};

struct EnclaveKeyPair {
  Bytes sign_pk;          // Ed25519, 32 bytes
  Bytes kem_pk;           // X25519, 32 bytes
  SecretBytes sign_seed;  // never serialized outside the enclave boundary
  SecretBytes kem_seed;
  Certificate cert;       // over (sign_pk, kem_pk, measurement), platform-signed

  // sign_pk || kem_pk: the 64-byte public identity (the protocol's "PK").
  Bytes public_id() const;
};

struct AttestationReport {
  Measurement measurement;
  Bytes enclave_pk;   // 64-byte public identity
  Nonce nonce{};      // verifier freshness challenge
  Certificate cert;   // enclave certificate, for chain verification
  Bytes signature;    // Ed25519 over measurement || enclave_pk || nonce

  // The exact signed byte string: digest(32) || enclave_pk(64) || nonce(16).
  Bytes signed_payload() const;
  Bytes serialize() const;
  static AttestationReport parse(ByteSpan data);
  bool operator==(const AttestationReport&) const = default;
};

struct ModelKey {
  SecretBytes key;  // 32 bytes
};

struct AttestVerdict {
  enum class Code { kAccept, kBadSignature, kBadChain, kMeasurementMismatch };
  Code code = Code::kAccept;

  bool accepted() const { return code == Code::kAccept; }
  const char* reason() const;
};

// -------------------------------------------------------------------------
// Operations.

// SHA-256 over the enclave's initial memory image.
Measurement measure(ByteSpan code_blob);

PlatformIdentity generate_platform_identity(Rng& rng);

// Deterministic in (platform signing seed, measurement); the certificate
// embeds the measurement and chains to the platform cert.
EnclaveKeyPair derive_enclave_keypair(const PlatformIdentity& platform,
                                      const Measurement& m);

AttestationReport sign_attestation(const EnclaveKeyPair& kp,
                                   const Measurement& m, const Nonce& nonce);

// Accepts iff the report's cert chains to `root`, the signature verifies
// under the certified key, and the measurement equals `expected`. Checks run
// in that order, so the verdict names the first failing factor.
AttestVerdict verify_attestation(const AttestationReport& report,
                                 const Certificate& root,
                                 const Measurement& expected);

// K_U = HKDF-SHA256(ikm = pk, salt = n, info = "OMG-model-key-v1").
ModelKey derive_model_key(ByteSpan pk, const Nonce& n);

struct ContainerMeta {
  uint32_t model_version = 0;
  Nonce nonce{};
};

// AES-256-GCM with a fresh random 12-byte IV; the container header (magic,
// version, nonce) is the associated data.
SealedModelContainer seal_model(const ModelKey& k, ByteSpan model,
                                const ContainerMeta& meta,
                                Rng& rng = system_rng());

// Plaintext iff the tag verifies over (ciphertext, header). nullopt covers
// tamper, wrong key and wrong nonce alike.
std::optional<Bytes> unseal_model(const ModelKey& k,
                                  const SealedModelContainer& sealed);

// Hybrid public-key encryption for key release: ephemeral X25519 + HKDF +
// AES-256-GCM. Output layout: eph_pk(32) || iv(12) || ciphertext || tag(16).
Bytes hpke_seal(ByteSpan recipient_kem_pk, ByteSpan plaintext, ByteSpan aad,
                Rng& rng = system_rng());
std::optional<Bytes> hpke_open(ByteSpan recipient_kem_seed, ByteSpan sealed,
                               ByteSpan aad);

}  // namespace omg::crypto

#endif  // OMG_CRYPTO_HPP_
