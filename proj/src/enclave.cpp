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

#include "omg/enclave.hpp"

#include <algorithm>
#include <atomic>

#include "omg/errors.hpp"

namespace omg::enclave {

namespace {
std::atomic<uint32_t> g_next_region_id{1};
}  // namespace

const char* state_name(EnclaveState s) {
  switch (s) {
    case EnclaveState::kUnloaded: return "UNLOADED";
    case EnclaveState::kSetup: return "SETUP";
    case EnclaveState::kBooted: return "BOOTED";
    case EnclaveState::kExecuting: return "EXECUTING";
    case EnclaveState::kParked: return "PARKED";
    case EnclaveState::kTorndown: return "TORNDOWN";
  }
  return "?";
}

std::optional<Bytes> os_read_memory(const SimulatedMemoryRegion& region) {
  if (region.locked && region.owner == RegionOwner::kEnclave) {
    return std::nullopt;  // AccessDenied: the isolation boundary held
  }
  return region.contents;
}

bool os_write_memory(SimulatedMemoryRegion& region, ByteSpan data,
                     size_t offset) {
  if (region.locked && region.owner == RegionOwner::kEnclave) {
    return false;
  }
  if (offset + data.size() > region.contents.size()) {
    region.contents.resize(offset + data.size());
  }
  std::copy(data.begin(), data.end(), region.contents.begin() + offset);
  return true;
}

CorePool::CorePool(int cores) : busy_(static_cast<size_t>(cores), false) {}

void CorePool::reserve(int core_id) {
  std::lock_guard lock(mu_);
  if (core_id < 0 || core_id >= static_cast<int>(busy_.size())) {
    throw CoreBusyError("core " + std::to_string(core_id) +
                        " out of range for pool of " +
                        std::to_string(busy_.size()));
  }
  if (busy_[core_id]) {
    throw CoreBusyError("core " + std::to_string(core_id) +
                        " already reserved");
  }
  busy_[core_id] = true;
}

int CorePool::reserve_any() {
  std::lock_guard lock(mu_);
  for (size_t i = 0; i < busy_.size(); ++i) {
    if (!busy_[i]) {
      busy_[i] = true;
      return static_cast<int>(i);
    }
  }
  throw CoreBusyError("no free core");
}

void CorePool::release(int core_id) {
  std::lock_guard lock(mu_);
  if (core_id >= 0 && core_id < static_cast<int>(busy_.size())) {
    busy_[core_id] = false;
  }
}

bool CorePool::is_reserved(int core_id) const {
  std::lock_guard lock(mu_);
  return core_id >= 0 && core_id < static_cast<int>(busy_.size()) &&
         busy_[core_id];
}

EnclaveInstance::EnclaveInstance(Bytes code, int core_id, CorePool& pool,
                                 const crypto::PlatformIdentity& platform,
                                 TraceSink trace)
    : pool_(pool), platform_(platform), trace_(std::move(trace)) {
  pool_.reserve(core_id);
  core_id_ = core_id;
  code_size_ = code.size();

  private_region_.id = g_next_region_id.fetch_add(1);
  private_region_.owner = RegionOwner::kEnclave;
  private_region_.contents = std::move(code);
  private_region_.locked = true;

  shared_region_.id = g_next_region_id.fetch_add(1);
  shared_region_.owner = RegionOwner::kShared;
  shared_region_.locked = false;

  transition(EnclaveState::kSetup);
}

EnclaveInstance::~EnclaveInstance() {
  if (core_id_ >= 0) pool_.release(core_id_);
}

crypto::AttestationReport EnclaveInstance::boot(const Nonce& nonce) {
  require_state({EnclaveState::kSetup}, "boot");
  // Attest whatever is actually in the private region now; a pre-boot
  // tamper therefore yields a measurement that no longer matches the
  // published code image.
  measurement_ = crypto::measure(private_region_.contents);
  keypair_ = crypto::derive_enclave_keypair(platform_, measurement_);
  auto report = crypto::sign_attestation(keypair_, measurement_, nonce);
  booted_ = true;
  transition(EnclaveState::kBooted);
  return report;
}

Bytes EnclaveInstance::execute(ByteSpan request) {
  require_state({EnclaveState::kBooted, EnclaveState::kExecuting}, "execute");
  if (!handler_) throw WrongStateError("execute: no handler registered");
  if (state_ != EnclaveState::kExecuting) {
    transition(EnclaveState::kExecuting);
  }
  // Requests and responses are staged in the shared region, like buffers
  // passed across a real enclave boundary.
  shared_region_.contents.assign(request.begin(), request.end());
  Bytes response = handler_(*this, shared_region_.contents);
  shared_region_.contents = response;
  return response;
}

audio::AudioClip EnclaveInstance::world_switch_read(
    SimulatedPeripheral& peripheral) {
  require_state({EnclaveState::kExecuting}, "world_switch_read");
  if (peripheral.queue_.empty()) {
    throw EmptyPeripheralError("peripheral queue is empty");
  }
  record_switch("to_secure");
  audio::AudioClip clip = std::move(peripheral.queue_.front());
  peripheral.queue_.pop_front();

  // The secure world deposits the samples in the shared region.
  Bytes staged(clip.samples.size() * 2);
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    staged[2 * i] = static_cast<uint8_t>(clip.samples[i] & 0xff);
    staged[2 * i + 1] = static_cast<uint8_t>((clip.samples[i] >> 8) & 0xff);
  }
  shared_region_.contents = std::move(staged);
  record_switch("to_normal");
  return clip;
}

void EnclaveInstance::park() {
  require_state({EnclaveState::kExecuting}, "park");
  pool_.release(core_id_);
  core_id_ = -1;
  transition(EnclaveState::kParked);  // private region remains locked
}

void EnclaveInstance::resume() {
  require_state({EnclaveState::kParked}, "resume");
  core_id_ = pool_.reserve_any();
  transition(EnclaveState::kExecuting);
}

void EnclaveInstance::teardown() {
  require_state(
      {EnclaveState::kBooted, EnclaveState::kExecuting, EnclaveState::kParked},
      "teardown");
  std::fill(private_region_.contents.begin(), private_region_.contents.end(),
            uint8_t{0});
  private_region_.zeroized = true;
  private_region_.locked = false;
  keypair_ = crypto::EnclaveKeyPair{};  // secret seeds wiped by SecretBytes
  if (core_id_ >= 0) {
    pool_.release(core_id_);
    core_id_ = -1;
  }
  transition(EnclaveState::kTorndown);
}

void EnclaveInstance::write_private_data(size_t offset, ByteSpan data) {
  const size_t end = code_size_ + offset + data.size();
  if (private_region_.contents.size() < end) {
    private_region_.contents.resize(end);
  }
  std::copy(data.begin(), data.end(),
            private_region_.contents.begin() + code_size_ + offset);
}

ByteSpan EnclaveInstance::read_private_data(size_t offset, size_t len) const {
  if (code_size_ + offset + len > private_region_.contents.size()) {
    throw WrongStateError("read_private_data: out of range");
  }
  return ByteSpan(private_region_.contents.data() + code_size_ + offset, len);
}

size_t EnclaveInstance::private_data_size() const {
  return private_region_.contents.size() - code_size_;
}

void EnclaveInstance::tamper_private_region_for_test(size_t offset,
                                                     uint8_t xor_mask) {
  if (offset < private_region_.contents.size()) {
    private_region_.contents[offset] ^= xor_mask;
  }
}

void EnclaveInstance::require_state(
    std::initializer_list<EnclaveState> allowed, const char* op) const {
  for (EnclaveState s : allowed) {
    if (state_ == s) return;
  }
  throw WrongStateError(std::string(op) + ": not allowed in state " +
                        state_name(state_));
}

void EnclaveInstance::transition(EnclaveState next) {
  EnclaveState prev = state_;
  state_ = next;
  if (trace_) {
    trace("ev=transition from=" + std::string(state_name(prev)) +
          " to=" + state_name(next) + " core=" + std::to_string(core_id_));
  }
}

void EnclaveInstance::record_switch(const char* direction) {
  ledger_.switches += 1;
  ledger_.simulated_us += kWorldSwitchUs;
  if (trace_) {
    trace("ev=world_switch dir=" + std::string(direction) +
          " us=" + std::to_string(kWorldSwitchUs));
  }
}

void EnclaveInstance::trace(const std::string& line) {
  if (trace_) trace_(line);
}

}  // namespace omg::enclave
