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

#include "omg/protocol.hpp"

#include <cstring>

#include "omg/errors.hpp"
#include "omg/fingerprint.hpp"
#include "omg/inference.hpp"
#include "omg/tlv.hpp"

namespace omg::proto {

namespace {

constexpr char kContainerFileName[] = "model.sealed";

// Associated data binding a key release to (version, nonce); both sides of
// the HPKE exchange must agree on it byte-exactly.
Bytes key_release_aad(uint32_t version, const Nonce& nonce) {
  Bytes aad;
  put_u32le(aad, version);
  aad.insert(aad.end(), nonce.begin(), nonce.end());
  return aad;
}

ErrorMsg error_body(ErrorCode code, const std::string& detail) {
  return ErrorMsg{error_code_name(code), detail};
}

[[noreturn]] void throw_remote_error(const ErrorMsg& error) {
  const std::string& c = error.code;
  const std::string& d = error.detail;
  if (c == "license-denied") throw LicenseDeniedError(d);
  if (c == "attestation-rejected") throw AttestationRejectedError(d);
  if (c == "rollback-detected") throw RollbackDetectedError(d);
  if (c == "unseal-failure") throw UnsealFailureError(d);
  if (c == "wrong-state") throw WrongStateError(d);
  if (c == "empty-peripheral") throw EmptyPeripheralError(d);
  if (c == "unknown-enclave") throw UnknownEnclaveError(d);
  if (c == "unsupported-format") throw UnsupportedFormatError(d);
  if (c == "malformed-data") throw MalformedDataError(d);
  throw TransportError("remote error " + c + ": " + d);
}

}  // namespace

void SessionTranscript::record(Direction dir, const ProtocolMessage& msg,
                               std::string channel) {
  TranscriptEntry entry;
  entry.dir = dir;
  entry.msg = msg;
  entry.raw = encode_message(msg);
  entry.tick = next_tick_++;
  entry.channel = std::move(channel);
  entries_.push_back(std::move(entry));
}

// ---------------------------------------------------------------------------
// Vendor.

Vendor::Vendor(crypto::Certificate platform_root,
               crypto::Measurement expected_measurement, Bytes model_plaintext,
               Rng& rng)
    : root_(std::move(platform_root)),
      expected_(expected_measurement),
      model_(std::move(model_plaintext)),
      rng_(rng) {}

ProtocolMessage Vendor::handle(const ProtocolMessage& request) {
  std::lock_guard lock(mu_);
  transcript_.record(Direction::kIn, request, "vendor");
  ProtocolMessage response;
  try {
    response = dispatch(request);
  } catch (const Error& e) {
    response = make_message(request.session,
                            ErrorMsg{error_code_name(e.code()), e.what()});
  }
  transcript_.record(Direction::kOut, response, "vendor");
  return response;
}

ProtocolMessage Vendor::dispatch(const ProtocolMessage& request) {
  switch (request.kind()) {
    case MsgKind::kAttestReport:
      return on_attest_report(request,
                              std::get<AttestReportMsg>(request.body));
    case MsgKind::kKeyRequest:
      return on_key_request(request, std::get<KeyRequestMsg>(request.body));
    case MsgKind::kRevoke: {
      const auto& m = std::get<RevokeMsg>(request.body);
      auto it = license_db_.find(m.enclave_pk);
      if (it == license_db_.end()) {
        throw UnknownEnclaveError("revoke: enclave never attested");
      }
      it->second.authorized = false;
      return make_message(request.session, AckMsg{version_, {}, "revoked"});
    }
    default:
      return make_message(
          request.session,
          error_body(ErrorCode::kMalformedData,
                     std::string("unexpected message: ") +
                         msg_kind_name(request.kind())));
  }
}

ProtocolMessage Vendor::on_attest_report(const ProtocolMessage& request,
                                         const AttestReportMsg& m) {
  crypto::AttestVerdict verdict =
      crypto::verify_attestation(m.report, root_, expected_);
  if (!verdict.accepted()) {
    return make_message(
        request.session,
        error_body(ErrorCode::kAttestationRejected, verdict.reason()));
  }

  const Bytes pk = m.report.enclave_pk;
  auto [it, inserted] = license_db_.try_emplace(pk);
  LicenseEntry& entry = it->second;
  if (inserted) {
    entry.authorized = default_authorized_;
    entry.kem_pk = m.report.cert.kem_pk;
    entry.model_version = 0;  // forces a fresh nonce below
  }

  // One nonce per (enclave, model version).
  if (entry.model_version != version_ || entry.model_version == 0) {
    rng_.fill(entry.current_nonce);
    entry.model_version = version_;
  }

  // Skip provisioning when the enclave already holds the current container.
  if (m.stored && m.stored->model_version == version_ &&
      m.stored->nonce == entry.current_nonce) {
    return make_message(request.session,
                        AckMsg{version_, entry.current_nonce,
                               "container-current"});
  }
  return make_message(request.session,
                      ProvisionModelMsg{seal_current_locked(pk, entry)});
}

ProtocolMessage Vendor::on_key_request(const ProtocolMessage& request,
                                       const KeyRequestMsg& m) {
  auto it = license_db_.find(m.enclave_pk);
  if (it == license_db_.end()) {
    throw UnknownEnclaveError("key request: enclave never attested");
  }
  return key_release_locked(request.session, m.enclave_pk, it->second);
}

ProtocolMessage Vendor::key_release_locked(const SessionId& session,
                                           ByteSpan pk, LicenseEntry& entry) {
  if (!entry.authorized) {
    return make_message(session, KeyDeniedMsg{"license-revoked"});
  }
  // K_U is re-derived on demand and dropped; it is never stored.
  crypto::ModelKey ku = crypto::derive_model_key(pk, entry.current_nonce);
  Bytes aad = key_release_aad(entry.model_version, entry.current_nonce);
  KeyReleaseMsg release;
  release.encrypted_key = crypto::hpke_seal(entry.kem_pk, ku.key.view(), aad,
                                            rng_);
  release.nonce = entry.current_nonce;
  release.model_version = entry.model_version;
  return make_message(session, release);
}

SealedModelContainer Vendor::seal_current_locked(ByteSpan pk,
                                                 const LicenseEntry& entry) {
  crypto::ModelKey ku = crypto::derive_model_key(pk, entry.current_nonce);
  return crypto::seal_model(
      ku, model_,
      crypto::ContainerMeta{entry.model_version, entry.current_nonce}, rng_);
}

ProtocolMessage Vendor::authorize(ByteSpan enclave_pk) {
  std::lock_guard lock(mu_);
  Bytes pk(enclave_pk.begin(), enclave_pk.end());
  auto it = license_db_.find(pk);
  if (it == license_db_.end()) {
    throw UnknownEnclaveError("authorize: enclave never attested");
  }
  return key_release_locked(SessionId{}, pk, it->second);
}

void Vendor::revoke(ByteSpan enclave_pk) {
  std::lock_guard lock(mu_);
  auto it = license_db_.find(Bytes(enclave_pk.begin(), enclave_pk.end()));
  if (it == license_db_.end()) {
    throw UnknownEnclaveError("revoke: enclave never attested");
  }
  it->second.authorized = false;
}

void Vendor::set_default_authorized(bool authorized) {
  std::lock_guard lock(mu_);
  default_authorized_ = authorized;
}

uint32_t Vendor::rotate_model(Bytes new_model) {
  std::lock_guard lock(mu_);
  model_ = std::move(new_model);
  ++version_;
  return version_;
}

Vendor::Rotation Vendor::rotate_model_for(Bytes new_model,
                                          ByteSpan enclave_pk) {
  std::lock_guard lock(mu_);
  model_ = std::move(new_model);
  ++version_;
  auto it = license_db_.find(Bytes(enclave_pk.begin(), enclave_pk.end()));
  if (it == license_db_.end()) {
    throw UnknownEnclaveError("rotate: enclave never attested");
  }
  LicenseEntry& entry = it->second;
  rng_.fill(entry.current_nonce);
  entry.model_version = version_;
  Rotation rotation;
  rotation.nonce = entry.current_nonce;
  rotation.container = seal_current_locked(it->first, entry);
  return rotation;
}

uint32_t Vendor::current_version() const {
  std::lock_guard lock(mu_);
  return version_;
}

std::optional<LicenseEntry> Vendor::license(ByteSpan enclave_pk) const {
  std::lock_guard lock(mu_);
  auto it = license_db_.find(Bytes(enclave_pk.begin(), enclave_pk.end()));
  if (it == license_db_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// User client.

UserClient::UserClient(crypto::Certificate platform_root,
                       crypto::Measurement expected_measurement)
    : root_(std::move(platform_root)), expected_(expected_measurement) {}

crypto::AttestVerdict UserClient::verify_report(
    const crypto::AttestationReport& report) {
  crypto::AttestVerdict verdict =
      crypto::verify_attestation(report, root_, expected_);
  verdicts_.push_back(verdict);
  return verdict;
}

// ---------------------------------------------------------------------------
// Enclave application.

const char* EnclaveApp::phase_name(Phase p) {
  switch (p) {
    case Phase::kPreparation: return "PREPARATION";
    case Phase::kInitialized: return "INITIALIZED";
    case Phase::kOperation: return "OPERATION";
  }
  return "?";
}

EnclaveApp::EnclaveApp(enclave::EnclaveInstance& instance,
                       std::filesystem::path storage_dir,
                       enclave::SimulatedPeripheral& microphone)
    : instance_(instance),
      container_path_(std::move(storage_dir)),
      microphone_(microphone) {
  container_path_ /= kContainerFileName;
  instance_.register_handler(
      [this](enclave::EnclaveInstance& inst, ByteSpan request) {
        return handle(inst, request);
      });
}

std::optional<StoredContainerInfo> EnclaveApp::stored_info() const {
  try {
    SealedModelContainer c = store::read_container(container_path_);
    return StoredContainerInfo{c.model_version, c.nonce};
  } catch (const Error&) {
    return std::nullopt;
  }
}

Bytes EnclaveApp::handle(enclave::EnclaveInstance&, ByteSpan request) {
  ProtocolMessage response;
  try {
    ProtocolMessage msg = decode_message(request);
    response = dispatch(msg);
  } catch (const Error& e) {
    response = make_message(SessionId{},
                            ErrorMsg{error_code_name(e.code()), e.what()});
  }
  return encode_message(response);
}

ProtocolMessage EnclaveApp::dispatch(const ProtocolMessage& request) {
  switch (request.kind()) {
    case MsgKind::kProvisionModel:
      return on_provision(request.session,
                          std::get<ProvisionModelMsg>(request.body));
    case MsgKind::kAck:
      return on_vendor_ack(request.session, std::get<AckMsg>(request.body));
    case MsgKind::kKeyRelease:
      return on_key_release(request.session,
                            std::get<KeyReleaseMsg>(request.body));
    case MsgKind::kQuery:
      return on_query(request.session, std::get<QueryMsg>(request.body));
    default:
      return make_message(
          request.session,
          error_body(ErrorCode::kMalformedData,
                     std::string("unexpected message: ") +
                         msg_kind_name(request.kind())));
  }
}

ProtocolMessage EnclaveApp::on_provision(const SessionId& session,
                                         const ProvisionModelMsg& m) {
  // Step 4: park the ciphertext on untrusted storage.
  store::write_container(container_path_, m.container);
  StoredContainerInfo info{m.container.model_version, m.container.nonce};
  const bool unchanged = session_freshness_ && *session_freshness_ == info &&
                         phase_ == Phase::kOperation;
  if (!unchanged) {
    session_freshness_ = info;
    model_.reset();
    phase_ = Phase::kInitialized;
  }
  return make_message(session,
                      AckMsg{info.model_version, info.nonce,
                             "container-stored"});
}

ProtocolMessage EnclaveApp::on_vendor_ack(const SessionId& session,
                                          const AckMsg& m) {
  StoredContainerInfo info{m.model_version, m.nonce};
  std::optional<StoredContainerInfo> on_disk = stored_info();
  if (!on_disk || !(*on_disk == info)) {
    return make_message(
        session, error_body(ErrorCode::kRollbackDetected,
                            "stored container missing or stale"));
  }
  const bool unchanged = session_freshness_ && *session_freshness_ == info &&
                         phase_ == Phase::kOperation;
  if (!unchanged) {
    session_freshness_ = info;
    model_.reset();
    phase_ = Phase::kInitialized;
  }
  return make_message(session,
                      AckMsg{info.model_version, info.nonce,
                             "container-current"});
}

ProtocolMessage EnclaveApp::on_key_release(const SessionId& session,
                                           const KeyReleaseMsg& m) {
  if (phase_ == Phase::kPreparation) {
    return make_message(session,
                        error_body(ErrorCode::kWrongState,
                                   "key release before preparation"));
  }
  Bytes aad = key_release_aad(m.model_version, m.nonce);
  auto ku_bytes = crypto::hpke_open(instance_.keypair().kem_seed.view(),
                                    m.encrypted_key, aad);
  if (!ku_bytes) {
    return make_message(session,
                        error_body(ErrorCode::kUnsealFailure,
                                   "key release failed to authenticate"));
  }
  crypto::ModelKey ku{SecretBytes(std::move(*ku_bytes))};

  SealedModelContainer container = store::read_container(container_path_);
  if (store::check_freshness(container, m.nonce, m.model_version) !=
      store::Freshness::kOk) {
    return make_message(
        session, error_body(ErrorCode::kRollbackDetected,
                            "stored container is not the licensed version"));
  }
  auto plaintext = crypto::unseal_model(ku, container);
  if (!plaintext) {
    return make_message(session,
                        error_body(ErrorCode::kUnsealFailure,
                                   "container failed to authenticate"));
  }

  // Step 6: the decrypted model exists only inside the locked region.
  instance_.write_private_data(0, *plaintext);
  const size_t model_len = plaintext->size();
  secure_wipe(*plaintext);
  model_ = std::make_unique<nn::TinyConvModel>(
      nn::load_model(instance_.read_private_data(0, model_len)));

  session_freshness_ = StoredContainerInfo{m.model_version, m.nonce};
  phase_ = Phase::kOperation;
  return make_message(session,
                      AckMsg{m.model_version, m.nonce, "model-loaded"});
}

ProtocolMessage EnclaveApp::on_query(const SessionId& session,
                                     const QueryMsg& m) {
  if (phase_ != Phase::kOperation || !model_) {
    return make_message(session,
                        error_body(ErrorCode::kWrongState,
                                   "query before initialization"));
  }
  audio::AudioClip clip;
  if (m.from_peripheral) {
    clip = instance_.world_switch_read(microphone_);  // step 7
  } else if (m.clip) {
    clip = *m.clip;
  } else {
    return make_message(session, error_body(ErrorCode::kMalformedData,
                                            "query carries no audio"));
  }
  audio::Fingerprint fp = audio::make_fingerprint(clip);
  nn::Classification result = nn::classify(fp, *model_);
  return make_message(session, ResultMsg{result.label, result.score});
}

// ---------------------------------------------------------------------------
// Enclave host.

EnclaveHost::EnclaveHost(Bytes code_image,
                         const std::filesystem::path& storage_dir,
                         enclave::CorePool& pool,
                         const crypto::PlatformIdentity& platform,
                         VendorLink& vendor, int core_id, Rng& rng,
                         enclave::TraceSink trace)
    : vendor_(vendor), rng_(rng) {
  instance_ = std::make_unique<enclave::EnclaveInstance>(
      std::move(code_image), core_id, pool, platform, std::move(trace));
  app_ = std::make_unique<EnclaveApp>(*instance_, storage_dir, microphone_);
  rng_.fill(session_);
}

const crypto::AttestationReport& EnclaveHost::report() const {
  if (!report_) throw WrongStateError("enclave has not booted");
  return *report_;
}

void EnclaveHost::run_preparation(UserClient* user) {
  if (instance_->state() == enclave::EnclaveState::kSetup) {
    Nonce challenge{};
    rng_.fill(challenge);
    report_ = instance_->boot(challenge);
    enclave_pk_ = instance_->keypair().public_id();
  }
  if (!report_) {
    throw WrongStateError("preparation: enclave is not bootable");
  }
  // Step 1: attest to the user. The flow proceeds on the vendor's verdict;
  // the user's is recorded.
  if (user != nullptr) user->verify_report(*report_);

  // Step 2: attest to the vendor, advertising any container already held.
  AttestReportMsg attest{*report_, app_->stored_info()};
  ProtocolMessage response =
      vendor_round_trip(make_message(session_, attest));

  if (const auto* error = std::get_if<ErrorMsg>(&response.body)) {
    throw_remote_error(*error);
  }
  if (!std::holds_alternative<ProvisionModelMsg>(response.body) &&
      !std::holds_alternative<AckMsg>(response.body)) {
    throw TransportError("preparation: unexpected vendor response");
  }

  // Steps 3 and 4 (or the skip): let the enclave process the container.
  ProtocolMessage enclave_response = enclave_round_trip(response);
  if (const auto* error = std::get_if<ErrorMsg>(&enclave_response.body)) {
    if (error->code == error_code_name(ErrorCode::kRollbackDetected) &&
        std::holds_alternative<AckMsg>(response.body)) {
      // The vendor believed our stored container was current but the disk
      // disagrees; fall back to full provisioning.
      AttestReportMsg retry{*report_, std::nullopt};
      ProtocolMessage fresh =
          vendor_round_trip(make_message(session_, retry));
      if (const auto* e2 = std::get_if<ErrorMsg>(&fresh.body)) {
        throw_remote_error(*e2);
      }
      ProtocolMessage stored = enclave_round_trip(fresh);
      if (const auto* e3 = std::get_if<ErrorMsg>(&stored.body)) {
        throw_remote_error(*e3);
      }
    } else {
      throw_remote_error(*error);
    }
  }
  prepared_ = true;
}

void EnclaveHost::run_initialization() {
  if (!prepared_) {
    throw WrongStateError("initialization before preparation");
  }
  // Step 5: ask for K_U.
  ProtocolMessage response =
      vendor_round_trip(make_message(session_, KeyRequestMsg{enclave_pk_}));
  if (const auto* denied = std::get_if<KeyDeniedMsg>(&response.body)) {
    // Decryption is never attempted.
    throw LicenseDeniedError(denied->reason);
  }
  if (const auto* error = std::get_if<ErrorMsg>(&response.body)) {
    throw_remote_error(*error);
  }
  if (!std::holds_alternative<KeyReleaseMsg>(response.body)) {
    throw TransportError("initialization: unexpected vendor response");
  }
  // Step 6: the enclave decrypts.
  ProtocolMessage enclave_response = enclave_round_trip(response);
  if (const auto* error = std::get_if<ErrorMsg>(&enclave_response.body)) {
    throw_remote_error(*error);
  }
}

ResultMsg EnclaveHost::query_clip(const audio::AudioClip& clip) {
  QueryMsg query;
  query.clip = clip;
  return run_query(query);
}

ResultMsg EnclaveHost::query_peripheral() {
  QueryMsg query;
  query.from_peripheral = true;
  return run_query(query);
}

ResultMsg EnclaveHost::run_query(const QueryMsg& query) {
  ProtocolMessage response =
      enclave_round_trip(make_message(session_, query));
  // Parked after every response, keeping the model resident for the next
  // query.
  if (instance_->state() == enclave::EnclaveState::kExecuting) {
    instance_->park();
  }
  if (const auto* error = std::get_if<ErrorMsg>(&response.body)) {
    throw_remote_error(*error);
  }
  if (const auto* result = std::get_if<ResultMsg>(&response.body)) {
    return *result;
  }
  throw TransportError("query: unexpected enclave response");
}

void EnclaveHost::feed_peripheral(const audio::AudioClip& clip) {
  microphone_.feed(clip);
}

void EnclaveHost::teardown() {
  instance_->teardown();
  prepared_ = false;
}

ProtocolMessage EnclaveHost::vendor_round_trip(
    const ProtocolMessage& request) {
  transcript_.record(Direction::kOut, request, "vendor");
  ProtocolMessage response = vendor_.round_trip(request);
  transcript_.record(Direction::kIn, response, "vendor");
  return response;
}

ProtocolMessage EnclaveHost::enclave_round_trip(
    const ProtocolMessage& request) {
  // A parked enclave gets a core back before it can run again.
  if (instance_->state() == enclave::EnclaveState::kParked) {
    instance_->resume();
  }
  transcript_.record(Direction::kOut, request, "enclave");
  Bytes raw = instance_->execute(encode_message(request));
  ProtocolMessage response = decode_message(raw);
  transcript_.record(Direction::kIn, response, "enclave");
  return response;
}

}  // namespace omg::proto
