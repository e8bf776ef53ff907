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

#include "omg/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>

#include <cstring>
#include <memory>

#include "omg/errors.hpp"
#include "omg/tlv.hpp"

namespace omg::crypto {

namespace {

struct EvpPkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpPkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct EvpMdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct EvpCipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, EvpPkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, EvpMdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, EvpCipherCtxDeleter>;

[[noreturn]] void fail(const char* what) { throw CryptoError(what); }

PkeyPtr raw_private_key(int type, ByteSpan seed) {
  if (seed.size() != kRawKeyLen) fail("raw key seed must be 32 bytes");
  PkeyPtr key(EVP_PKEY_new_raw_private_key(type, nullptr, seed.data(),
                                           seed.size()));
  if (!key) fail("EVP_PKEY_new_raw_private_key");
  return key;
}

PkeyPtr raw_public_key(int type, ByteSpan pub) {
  if (pub.size() != kRawKeyLen) fail("raw public key must be 32 bytes");
  PkeyPtr key(
      EVP_PKEY_new_raw_public_key(type, nullptr, pub.data(), pub.size()));
  if (!key) fail("EVP_PKEY_new_raw_public_key");
  return key;
}

Bytes raw_public_of(EVP_PKEY* key) {
  size_t len = 0;
  if (EVP_PKEY_get_raw_public_key(key, nullptr, &len) != 1) {
    fail("EVP_PKEY_get_raw_public_key (size)");
  }
  Bytes out(len);
  if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1) {
    fail("EVP_PKEY_get_raw_public_key");
  }
  out.resize(len);
  return out;
}

// Certificate TLV tags.
enum CertTag : uint8_t {
  kCertSubject = 0x01,
  kCertScheme = 0x02,
  kCertSignPk = 0x03,
  kCertKemPk = 0x04,
  kCertMeasurement = 0x05,
  kCertIssuer = 0x06,
  kCertSignature = 0x07,
};

// Attestation report TLV tags.
enum ReportTag : uint8_t {
  kReportMeasurement = 0x01,
  kReportEnclavePk = 0x02,
  kReportNonce = 0x03,
  kReportCert = 0x04,
  kReportSignature = 0x05,
};

constexpr std::string_view kPlatformSubject = "omg-platform";
constexpr std::string_view kEnclaveSubject = "omg-enclave";
constexpr std::string_view kEnclaveSignInfo = "OMG-enclave-sign-v1";
constexpr std::string_view kEnclaveKemInfo = "OMG-enclave-kem-v1";

ByteSpan as_span(std::string_view s) {
  return ByteSpan(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Primitives.

Bytes sha256(ByteSpan data) {
  Bytes digest(kDigestLen);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != kDigestLen) {
    fail("EVP_Digest(sha256)");
  }
  return digest;
}

Bytes hkdf_sha256(ByteSpan ikm, ByteSpan salt, ByteSpan info, size_t out_len) {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(),
                                 static_cast<int>(ikm.size())) != 1) {
    fail("HKDF init");
  }
  if (!salt.empty() &&
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(),
                                  static_cast<int>(salt.size())) != 1) {
    fail("HKDF salt");
  }
  if (!info.empty() &&
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), info.data(),
                                  static_cast<int>(info.size())) != 1) {
    fail("HKDF info");
  }
  Bytes out(out_len);
  size_t len = out_len;
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != out_len) {
    fail("HKDF derive");
  }
  return out;
}

AeadSealed aead_seal(ByteSpan key, ByteSpan iv, ByteSpan plaintext,
                     ByteSpan aad) {
  if (key.size() != kRawKeyLen) fail("AEAD key must be 32 bytes");
  if (iv.size() != kAeadIvLen) fail("AEAD IV must be 12 bytes");
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                         nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(iv.size()), nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(),
                         iv.data()) != 1) {
    fail("AES-GCM encrypt init");
  }
  int out_len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &out_len, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    fail("AES-GCM aad");
  }
  AeadSealed sealed;
  sealed.ciphertext.resize(plaintext.size());
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), sealed.ciphertext.data(), &out_len,
                        plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    fail("AES-GCM encrypt");
  }
  int final_len = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), sealed.ciphertext.data() + out_len,
                          &final_len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kAeadTagLen,
                          sealed.tag.data()) != 1) {
    fail("AES-GCM finalize");
  }
  return sealed;
}

std::optional<Bytes> aead_open(ByteSpan key, ByteSpan iv, ByteSpan ciphertext,
                               ByteSpan tag, ByteSpan aad) {
  if (key.size() != kRawKeyLen) fail("AEAD key must be 32 bytes");
  if (iv.size() != kAeadIvLen) fail("AEAD IV must be 12 bytes");
  if (tag.size() != kAeadTagLen) return std::nullopt;
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx ||
      EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                         nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(iv.size()), nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(),
                         iv.data()) != 1) {
    fail("AES-GCM decrypt init");
  }
  int out_len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &out_len, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    fail("AES-GCM aad");
  }
  Bytes plaintext(ciphertext.size());
  if (!ciphertext.empty() &&
      EVP_DecryptUpdate(ctx.get(), plaintext.data(), &out_len,
                        ciphertext.data(),
                        static_cast<int>(ciphertext.size())) != 1) {
    return std::nullopt;
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kAeadTagLen,
                          const_cast<uint8_t*>(tag.data())) != 1) {
    fail("AES-GCM set tag");
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + out_len, &final_len) !=
      1) {
    return std::nullopt;  // authentication failure
  }
  return plaintext;
}

Bytes ed25519_public_from_seed(ByteSpan seed) {
  return raw_public_of(raw_private_key(EVP_PKEY_ED25519, seed).get());
}

Bytes ed25519_sign(ByteSpan seed, ByteSpan message) {
  PkeyPtr key = raw_private_key(EVP_PKEY_ED25519, seed);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr,
                                 key.get()) != 1) {
    fail("Ed25519 sign init");
  }
  size_t sig_len = kSignatureLen;
  Bytes sig(sig_len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(),
                     message.size()) != 1 ||
      sig_len != kSignatureLen) {
    fail("Ed25519 sign");
  }
  return sig;
}

bool ed25519_verify(ByteSpan public_key, ByteSpan message, ByteSpan signature) {
  if (public_key.size() != kRawKeyLen || signature.size() != kSignatureLen) {
    return false;
  }
  PkeyPtr key = raw_public_key(EVP_PKEY_ED25519, public_key);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr,
                                   key.get()) != 1) {
    fail("Ed25519 verify init");
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

Bytes x25519_public_from_seed(ByteSpan seed) {
  return raw_public_of(raw_private_key(EVP_PKEY_X25519, seed).get());
}

Bytes x25519_shared_secret(ByteSpan my_seed, ByteSpan peer_public) {
  PkeyPtr mine = raw_private_key(EVP_PKEY_X25519, my_seed);
  PkeyPtr peer = raw_public_key(EVP_PKEY_X25519, peer_public);
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(mine.get(), nullptr));
  size_t len = 0;
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1) {
    fail("X25519 derive init");
  }
  Bytes secret(len);
  if (EVP_PKEY_derive(ctx.get(), secret.data(), &len) != 1) {
    fail("X25519 derive");
  }
  secret.resize(len);
  return secret;
}

// ---------------------------------------------------------------------------
// Domain types.

Measurement Measurement::from_bytes(ByteSpan b) {
  if (b.size() != kDigestLen) {
    throw MalformedDataError("measurement must be 32 bytes");
  }
  Measurement m;
  std::memcpy(m.digest.data(), b.data(), kDigestLen);
  return m;
}

Bytes Certificate::tbs_bytes() const {
  TlvWriter w;
  w.add_string(kCertSubject, subject);
  w.add_string(kCertScheme, scheme);
  w.add(kCertSignPk, sign_pk);
  w.add(kCertKemPk, kem_pk);
  if (measurement) w.add(kCertMeasurement, measurement->digest);
  w.add_string(kCertIssuer, issuer);
  return w.take();
}

Bytes Certificate::serialize() const {
  Bytes out = tbs_bytes();
  TlvWriter sig;
  sig.add(kCertSignature, signature);
  Bytes sig_bytes = sig.take();
  out.insert(out.end(), sig_bytes.begin(), sig_bytes.end());
  return out;
}

Certificate Certificate::parse(ByteSpan data) {
  TlvReader r(data);
  Certificate cert;
  cert.subject = r.expect_string(kCertSubject);
  cert.scheme = r.expect_string(kCertScheme);
  cert.sign_pk = r.expect_len(kCertSignPk, kRawKeyLen);
  cert.kem_pk = r.expect(kCertKemPk);
  if (!cert.kem_pk.empty() && cert.kem_pk.size() != kRawKeyLen) {
    throw MalformedDataError("certificate kem key must be 32 bytes or empty");
  }
  Bytes m;
  if (r.maybe(kCertMeasurement, &m)) {
    cert.measurement = Measurement::from_bytes(m);
  }
  cert.issuer = r.expect_string(kCertIssuer);
  cert.signature = r.expect_len(kCertSignature, kSignatureLen);
  r.finish();
  return cert;
}

bool Certificate::verify_signature(ByteSpan issuer_sign_pk) const {
  if (scheme != "ed25519") return false;
  return ed25519_verify(issuer_sign_pk, tbs_bytes(), signature);
}

Bytes EnclaveKeyPair::public_id() const {
  Bytes id = sign_pk;
  id.insert(id.end(), kem_pk.begin(), kem_pk.end());
  return id;
}

Bytes AttestationReport::signed_payload() const {
  Bytes payload = measurement.to_bytes();
  payload.insert(payload.end(), enclave_pk.begin(), enclave_pk.end());
  payload.insert(payload.end(), nonce.begin(), nonce.end());
  return payload;
}

Bytes AttestationReport::serialize() const {
  TlvWriter w;
  w.add(kReportMeasurement, measurement.digest);
  w.add(kReportEnclavePk, enclave_pk);
  w.add(kReportNonce, nonce);
  w.add(kReportCert, cert.serialize());
  w.add(kReportSignature, signature);
  return w.take();
}

AttestationReport AttestationReport::parse(ByteSpan data) {
  TlvReader r(data);
  AttestationReport report;
  report.measurement =
      Measurement::from_bytes(r.expect_len(kReportMeasurement, kDigestLen));
  report.enclave_pk = r.expect_len(kReportEnclavePk, kPublicIdLen);
  Bytes nonce = r.expect_len(kReportNonce, report.nonce.size());
  std::memcpy(report.nonce.data(), nonce.data(), nonce.size());
  report.cert = Certificate::parse(r.expect(kReportCert));
  report.signature = r.expect_len(kReportSignature, kSignatureLen);
  r.finish();
  return report;
}

const char* AttestVerdict::reason() const {
  switch (code) {
    case Code::kAccept: return "accept";
    case Code::kBadSignature: return "bad-signature";
    case Code::kBadChain: return "bad-chain";
    case Code::kMeasurementMismatch: return "measurement-mismatch";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Operations.

Measurement measure(ByteSpan code_blob) {
  return Measurement::from_bytes(sha256(code_blob));
}

PlatformIdentity generate_platform_identity(Rng& rng) {
  PlatformIdentity identity;
  identity.signing_seed = SecretBytes(rng.bytes(kRawKeyLen));

  Certificate& cert = identity.platform_cert;
  cert.subject = std::string(kPlatformSubject);
  cert.sign_pk = ed25519_public_from_seed(identity.signing_seed.view());
  cert.issuer = std::string(kPlatformSubject);
  cert.signature = ed25519_sign(identity.signing_seed.view(), cert.tbs_bytes());
  return identity;
}

EnclaveKeyPair derive_enclave_keypair(const PlatformIdentity& platform,
                                      const Measurement& m) {
  EnclaveKeyPair kp;
  kp.sign_seed = SecretBytes(hkdf_sha256(platform.signing_seed.view(),
                                         m.digest, as_span(kEnclaveSignInfo),
                                         kRawKeyLen));
  kp.kem_seed = SecretBytes(hkdf_sha256(platform.signing_seed.view(), m.digest,
                                        as_span(kEnclaveKemInfo), kRawKeyLen));
  kp.sign_pk = ed25519_public_from_seed(kp.sign_seed.view());
  kp.kem_pk = x25519_public_from_seed(kp.kem_seed.view());

  kp.cert.subject = std::string(kEnclaveSubject);
  kp.cert.sign_pk = kp.sign_pk;
  kp.cert.kem_pk = kp.kem_pk;
  kp.cert.measurement = m;
  kp.cert.issuer = platform.platform_cert.subject;
  kp.cert.signature =
      ed25519_sign(platform.signing_seed.view(), kp.cert.tbs_bytes());
  return kp;
}

AttestationReport sign_attestation(const EnclaveKeyPair& kp,
                                   const Measurement& m, const Nonce& nonce) {
  AttestationReport report;
  report.measurement = m;
  report.enclave_pk = kp.public_id();
  report.nonce = nonce;
  report.cert = kp.cert;
  report.signature = ed25519_sign(kp.sign_seed.view(), report.signed_payload());
  return report;
}

AttestVerdict verify_attestation(const AttestationReport& report,
                                 const Certificate& root,
                                 const Measurement& expected) {
  using Code = AttestVerdict::Code;
  // Chain: the enclave cert must be signed by the root, bind the same keys
  // the report claims, and carry the reported measurement.
  Bytes reported_sign_pk(report.enclave_pk.begin(),
                         report.enclave_pk.begin() + kRawKeyLen);
  Bytes reported_kem_pk(report.enclave_pk.begin() + kRawKeyLen,
                        report.enclave_pk.end());
  bool chain_ok = root.verify_signature(root.sign_pk) &&
                  report.cert.verify_signature(root.sign_pk) &&
                  report.cert.issuer == root.subject &&
                  report.cert.sign_pk == reported_sign_pk &&
                  report.cert.kem_pk == reported_kem_pk &&
                  report.cert.measurement.has_value() &&
                  *report.cert.measurement == report.measurement;
  if (!chain_ok) return {Code::kBadChain};
  if (!ed25519_verify(report.cert.sign_pk, report.signed_payload(),
                      report.signature)) {
    return {Code::kBadSignature};
  }
  if (!(report.measurement == expected)) {
    return {Code::kMeasurementMismatch};
  }
  return {Code::kAccept};
}

ModelKey derive_model_key(ByteSpan pk, const Nonce& n) {
  if (pk.empty()) throw CryptoError("derive_model_key: empty public key");
  return ModelKey{SecretBytes(
      hkdf_sha256(pk, n, as_span(kModelKeyInfo), kRawKeyLen))};
}

SealedModelContainer seal_model(const ModelKey& k, ByteSpan model,
                                const ContainerMeta& meta, Rng& rng) {
  SealedModelContainer c;
  c.model_version = meta.model_version;
  c.nonce = meta.nonce;
  rng.fill(c.iv);
  AeadSealed sealed = aead_seal(k.key.view(), c.iv, model, c.associated_data());
  c.ciphertext = std::move(sealed.ciphertext);
  c.tag = sealed.tag;
  return c;
}

std::optional<Bytes> unseal_model(const ModelKey& k,
                                  const SealedModelContainer& sealed) {
  return aead_open(k.key.view(), sealed.iv, sealed.ciphertext, sealed.tag,
                   sealed.associated_data());
}

Bytes hpke_seal(ByteSpan recipient_kem_pk, ByteSpan plaintext, ByteSpan aad,
                Rng& rng) {
  Bytes eph_seed = rng.bytes(kRawKeyLen);
  Bytes eph_pk = x25519_public_from_seed(eph_seed);
  Bytes shared = x25519_shared_secret(eph_seed, recipient_kem_pk);
  secure_wipe(eph_seed);

  Bytes salt = eph_pk;
  salt.insert(salt.end(), recipient_kem_pk.begin(), recipient_kem_pk.end());
  Bytes kek = hkdf_sha256(shared, salt, as_span(kKeyReleaseInfo), kRawKeyLen);
  secure_wipe(shared);

  Bytes iv(kAeadIvLen);
  rng.fill(iv);
  AeadSealed sealed = aead_seal(kek, iv, plaintext, aad);
  secure_wipe(kek);

  Bytes out = std::move(eph_pk);
  out.insert(out.end(), iv.begin(), iv.end());
  out.insert(out.end(), sealed.ciphertext.begin(), sealed.ciphertext.end());
  out.insert(out.end(), sealed.tag.begin(), sealed.tag.end());
  return out;
}

std::optional<Bytes> hpke_open(ByteSpan recipient_kem_seed, ByteSpan sealed,
                               ByteSpan aad) {
  if (sealed.size() < kRawKeyLen + kAeadIvLen + kAeadTagLen) {
    return std::nullopt;
  }
  ByteSpan eph_pk = sealed.subspan(0, kRawKeyLen);
  ByteSpan iv = sealed.subspan(kRawKeyLen, kAeadIvLen);
  ByteSpan ciphertext = sealed.subspan(
      kRawKeyLen + kAeadIvLen,
      sealed.size() - kRawKeyLen - kAeadIvLen - kAeadTagLen);
  ByteSpan tag = sealed.subspan(sealed.size() - kAeadTagLen);

  Bytes shared = x25519_shared_secret(recipient_kem_seed, eph_pk);
  Bytes salt(eph_pk.begin(), eph_pk.end());
  Bytes my_pk = x25519_public_from_seed(recipient_kem_seed);
  salt.insert(salt.end(), my_pk.begin(), my_pk.end());
  Bytes kek = hkdf_sha256(shared, salt, as_span(kKeyReleaseInfo), kRawKeyLen);
  secure_wipe(shared);

  auto plaintext = aead_open(kek, iv, ciphertext, tag, aad);
  secure_wipe(kek);
  return plaintext;
}

}  // namespace omg::crypto
