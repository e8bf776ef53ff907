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
// The three-phase provisioning protocol as explicit state machines for the
// three principals:
//
//   I.  Preparation: the enclave boots, attests to user and vendor, and the
//       vendor provisions the sealed model, which lands on untrusted
//       storage.
//   II. Initialization: the vendor releases K_U over the attested channel
//       (encrypted to the enclave's KEM key) and the enclave unseals the
//       model into its locked region.
//   III.Operation: queries run entirely on-device; the enclave parks
//       between queries and no vendor interaction happens.
//
// K_U is never persisted by the vendor; it is re-derived from (PK, n) on
// demand. A fresh nonce per (enclave, model version) makes stale containers
// undecryptable, which is the rollback defense.

#ifndef OMG_PROTOCOL_HPP_
#define OMG_PROTOCOL_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "omg/enclave.hpp"
#include "omg/messages.hpp"
#include "omg/model.hpp"
#include "omg/modelstore.hpp"

namespace omg::proto {

enum class Direction { kIn, kOut };

struct TranscriptEntry {
  Direction dir = Direction::kIn;
  ProtocolMessage msg;
  Bytes raw;           // canonical encoding, the bytes that crossed the wire
  uint64_t tick = 0;   // simulated timestamp (per-transcript logical clock)
  std::string channel; // "vendor", "enclave", "user"
};

class SessionTranscript {
 public:
  void record(Direction dir, const ProtocolMessage& msg,
              std::string channel);
  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<TranscriptEntry> entries_;
  uint64_t next_tick_ = 0;
};

struct LicenseEntry {
  bool authorized = true;
  Nonce current_nonce{};       // fresh per (enclave, model version)
  uint32_t model_version = 0;  // version current_nonce belongs to
  Bytes kem_pk;                // bound at attestation
};

// Vendor V: verifies attestation, provisions sealed models, releases or
// denies keys, and manages licenses. handle() is safe to call from
// concurrent endpoint sessions.
class Vendor {
 public:
  Vendor(crypto::Certificate platform_root,
         crypto::Measurement expected_measurement, Bytes model_plaintext,
         Rng& rng = system_rng());

  // Request/response entry point used by both the in-process link and the
  // TCP endpoint. Never throws; failures come back as ERROR / KEY_DENIED.
  ProtocolMessage handle(const ProtocolMessage& request);

  // KEY_RELEASE for the current nonce, or KEY_DENIED; throws
  // UnknownEnclaveError for a pk that never attested.
  ProtocolMessage authorize(ByteSpan enclave_pk);
  void revoke(ByteSpan enclave_pk);  // throws UnknownEnclaveError
  void set_default_authorized(bool authorized);

  // Swaps the model and bumps the version; registered enclaves get a fresh
  // nonce and container at their next provisioning.
  uint32_t rotate_model(Bytes new_model);

  struct Rotation {
    Nonce nonce{};
    SealedModelContainer container;
  };
  // rotate_model plus an immediate re-seal for one registered enclave.
  Rotation rotate_model_for(Bytes new_model, ByteSpan enclave_pk);

  uint32_t current_version() const;
  std::optional<LicenseEntry> license(ByteSpan enclave_pk) const;
  SessionTranscript& transcript() { return transcript_; }

 private:
  ProtocolMessage dispatch(const ProtocolMessage& request);
  ProtocolMessage on_attest_report(const ProtocolMessage& request,
                                   const AttestReportMsg& m);
  ProtocolMessage on_key_request(const ProtocolMessage& request,
                                 const KeyRequestMsg& m);
  ProtocolMessage key_release_locked(const SessionId& session, ByteSpan pk,
                                     LicenseEntry& entry);
  SealedModelContainer seal_current_locked(ByteSpan pk,
                                           const LicenseEntry& entry);

  mutable std::mutex mu_;
  crypto::Certificate root_;
  crypto::Measurement expected_;
  Bytes model_;
  uint32_t version_ = 1;
  bool default_authorized_ = true;
  std::map<Bytes, LicenseEntry> license_db_;
  Rng& rng_;
  SessionTranscript transcript_;
};

// User U's verifier: checks attestation reports against the platform root
// and the published code measurement, and records the verdicts (step 1 of
// the flow; the human-visible display channel is not modeled).
class UserClient {
 public:
  UserClient(crypto::Certificate platform_root,
             crypto::Measurement expected_measurement);

  crypto::AttestVerdict verify_report(const crypto::AttestationReport& report);
  const std::vector<crypto::AttestVerdict>& verdicts() const {
    return verdicts_;
  }

 private:
  crypto::Certificate root_;
  crypto::Measurement expected_;
  std::vector<crypto::AttestVerdict> verdicts_;
};

// The enclave-resident application: protocol phase machine plus the
// keyword-recognition workload. Installed as the instance's execute
// handler; all inputs and outputs are wire messages.
class EnclaveApp {
 public:
  enum class Phase { kPreparation, kInitialized, kOperation };
  static const char* phase_name(Phase p);

  EnclaveApp(enclave::EnclaveInstance& instance,
             std::filesystem::path storage_dir,
             enclave::SimulatedPeripheral& microphone);

  Phase phase() const { return phase_; }
  bool has_model() const { return model_ != nullptr; }
  const std::filesystem::path& container_path() const {
    return container_path_;
  }

  // Header (version, nonce) of the container currently on untrusted
  // storage, if one parses.
  std::optional<StoredContainerInfo> stored_info() const;

 private:
  Bytes handle(enclave::EnclaveInstance& instance, ByteSpan request);
  ProtocolMessage dispatch(const ProtocolMessage& request);
  ProtocolMessage on_provision(const SessionId& session,
                               const ProvisionModelMsg& m);
  ProtocolMessage on_vendor_ack(const SessionId& session, const AckMsg& m);
  ProtocolMessage on_key_release(const SessionId& session,
                                 const KeyReleaseMsg& m);
  ProtocolMessage on_query(const SessionId& session, const QueryMsg& m);

  enclave::EnclaveInstance& instance_;
  std::filesystem::path container_path_;
  enclave::SimulatedPeripheral& microphone_;
  Phase phase_ = Phase::kPreparation;
  // Last provisioned (version, nonce), kept in-session only; cross-session
  // rollback protection rests on the nonce-derived key.
  std::optional<StoredContainerInfo> session_freshness_;
  std::unique_ptr<nn::TinyConvModel> model_;
};

// Transport-agnostic request/response path to the vendor.
class VendorLink {
 public:
  virtual ~VendorLink() = default;
  virtual ProtocolMessage round_trip(const ProtocolMessage& request) = 0;
};

class LocalVendorLink : public VendorLink {
 public:
  explicit LocalVendorLink(Vendor& vendor) : vendor_(vendor) {}
  ProtocolMessage round_trip(const ProtocolMessage& request) override {
    return vendor_.handle(request);
  }

 private:
  Vendor& vendor_;
};

// The untrusted runtime on U's device: owns the enclave instance, drives
// the lifecycle and relays protocol messages. Single logical thread.
class EnclaveHost {
 public:
  EnclaveHost(Bytes code_image, const std::filesystem::path& storage_dir,
              enclave::CorePool& pool,
              const crypto::PlatformIdentity& platform, VendorLink& vendor,
              int core_id = 0, Rng& rng = system_rng(),
              enclave::TraceSink trace = {});

  // Phase I. Boots (if not yet booted) with a fresh verifier nonce, attests
  // to the user (when given) and the vendor, and lets the enclave store the
  // sealed model. Provisioning is skipped when the vendor confirms the
  // stored container is current. Throws AttestationRejectedError when V
  // refuses to provision.
  void run_preparation(UserClient* user = nullptr);

  // Phase II. Requests K_U and has the enclave unseal the model. Throws
  // LicenseDeniedError (decryption is never attempted), RollbackDetectedError
  // or UnsealFailureError.
  void run_initialization();

  // Phase III. The enclave parks after every response.
  ResultMsg query_clip(const audio::AudioClip& clip);
  ResultMsg query_peripheral();

  // Fixture injection port of the simulated microphone driver.
  void feed_peripheral(const audio::AudioClip& clip);

  void teardown();

  enclave::EnclaveInstance& instance() { return *instance_; }
  EnclaveApp& app() { return *app_; }
  enclave::SimulatedPeripheral& microphone() { return microphone_; }
  SessionTranscript& transcript() { return transcript_; }
  const SessionId& session() const { return session_; }
  const Bytes& enclave_pk() const { return enclave_pk_; }
  const crypto::AttestationReport& report() const;

 private:
  ProtocolMessage vendor_round_trip(const ProtocolMessage& request);
  ProtocolMessage enclave_round_trip(const ProtocolMessage& request);
  ResultMsg run_query(const QueryMsg& query);
  [[noreturn]] void raise_error(const ErrorMsg& error);

  enclave::SimulatedPeripheral microphone_;
  std::unique_ptr<enclave::EnclaveInstance> instance_;
  std::unique_ptr<EnclaveApp> app_;
  VendorLink& vendor_;
  Rng& rng_;
  SessionTranscript transcript_;
  SessionId session_{};
  Bytes enclave_pk_;
  std::optional<crypto::AttestationReport> report_;
  bool prepared_ = false;
};

}  // namespace omg::proto

#endif  // OMG_PROTOCOL_HPP_
