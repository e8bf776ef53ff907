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
// In-process simulation of a user-space enclave: the four-stage lifecycle
// (setup, boot, execution, teardown) plus park/resume for repeated queries.
// Isolation is enforced by the region abstraction: the OS-level adversary
// only ever touches memory through os_read_memory / os_write_memory, which
// fail while a region is locked. World switches to the secure world are
// accounted in a ledger at 0.3 ms (300 us) per switch instead of sleeping.

#ifndef OMG_ENCLAVE_HPP_
#define OMG_ENCLAVE_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "omg/audio.hpp"
#include "omg/bytes.hpp"
#include "omg/crypto.hpp"

namespace omg::enclave {

enum class EnclaveState {
  kUnloaded,
  kSetup,
  kBooted,
  kExecuting,
  kParked,
  kTorndown,
};

const char* state_name(EnclaveState s);

enum class RegionOwner { kEnclave, kOs, kShared };

struct SimulatedMemoryRegion {
  uint32_t id = 0;
  RegionOwner owner = RegionOwner::kOs;
  bool locked = false;
  Bytes contents;
  bool zeroized = false;
};

// The OS adversary's only paths into memory. Reads/writes succeed iff the
// region is unlocked or OS-accessible by ownership.
std::optional<Bytes> os_read_memory(const SimulatedMemoryRegion& region);
bool os_write_memory(SimulatedMemoryRegion& region, ByteSpan data,
                     size_t offset = 0);

inline constexpr uint64_t kWorldSwitchUs = 300;  // 0.3 ms per switch

struct SwitchLedger {
  uint64_t switches = 0;
  uint64_t simulated_us = 0;

  double simulated_ms() const { return static_cast<double>(simulated_us) / 1000.0; }
};

// Cores available for enclave use. Default pool size matches an octa-core
// mobile SoC. Shared between instances, hence the lock.
class CorePool {
 public:
  explicit CorePool(int cores = 8);
  void reserve(int core_id);  // throws CoreBusyError
  int reserve_any();          // throws CoreBusyError when the pool is empty
  void release(int core_id);
  bool is_reserved(int core_id) const;
  int size() const { return static_cast<int>(busy_.size()); }

 private:
  mutable std::mutex mu_;
  std::vector<bool> busy_;
};

// Microphone stand-in: a queue of clips fed from WAV fixtures, readable
// only through the secure-world path (EnclaveInstance::world_switch_read).
class SimulatedPeripheral {
 public:
  void feed(audio::AudioClip clip) { queue_.push_back(std::move(clip)); }
  bool empty() const { return queue_.empty(); }
  size_t queued() const { return queue_.size(); }

 private:
  friend class EnclaveInstance;
  std::deque<audio::AudioClip> queue_;
};

// One line per lifecycle transition or world switch, key=value format.
using TraceSink = std::function<void(const std::string&)>;

// Requests and responses cross the enclave boundary as opaque byte buffers
// staged in the shared region; the registered handler is the enclave's
// application code.
class EnclaveInstance {
 public:
  using Handler = std::function<Bytes(EnclaveInstance&, ByteSpan request)>;

  // Lifecycle step 1 (setup): allocates the locked private region holding
  // `code` and the OS-visible shared region, and reserves `core_id`.
  EnclaveInstance(Bytes code, int core_id, CorePool& pool,
                  const crypto::PlatformIdentity& platform,
                  TraceSink trace = {});
  ~EnclaveInstance();

  EnclaveInstance(const EnclaveInstance&) = delete;
  EnclaveInstance& operator=(const EnclaveInstance&) = delete;

  // Lifecycle step 2: measures the private region, derives the enclave key
  // pair and signs an attestation report over the verifier's nonce.
  crypto::AttestationReport boot(const Nonce& nonce);

  // Lifecycle step 3: dispatches a request to the registered handler. The
  // request and response are staged through the shared region.
  Bytes execute(ByteSpan request);

  // Secure peripheral input: two world switches (0.6 ms simulated), clip
  // lands in the shared region and is returned to the caller inside the
  // enclave.
  audio::AudioClip world_switch_read(SimulatedPeripheral& peripheral);

  void park();    // release the core; memory stays locked
  void resume();  // re-reserve a core; memory contents are untouched

  // Lifecycle step 4: zeroize, unlock, release the core.
  void teardown();

  void register_handler(Handler handler) { handler_ = std::move(handler); }

  EnclaveState state() const { return state_; }
  int core_id() const { return core_id_; }
  const SwitchLedger& ledger() const { return ledger_; }
  const crypto::Measurement& measurement() const { return measurement_; }
  const crypto::EnclaveKeyPair& keypair() const { return keypair_; }
  size_t code_size() const { return code_size_; }

  SimulatedMemoryRegion& private_region() { return private_region_; }
  const SimulatedMemoryRegion& private_region() const { return private_region_; }
  SimulatedMemoryRegion& shared_region() { return shared_region_; }
  const SimulatedMemoryRegion& shared_region() const { return shared_region_; }

  // Enclave-internal access to its own private memory. This is the SA's
  // view, not the OS path; offsets are relative to the data area that
  // starts after the code image.
  void write_private_data(size_t offset, ByteSpan data);
  ByteSpan read_private_data(size_t offset, size_t len) const;
  size_t private_data_size() const;

  // Models an adversary that modifies enclave memory between load and
  // attestation. Only meaningful before boot().
  void tamper_private_region_for_test(size_t offset, uint8_t xor_mask);

 private:
  void require_state(std::initializer_list<EnclaveState> allowed,
                     const char* op) const;
  void transition(EnclaveState next);
  void record_switch(const char* direction);
  void trace(const std::string& line);

  EnclaveState state_ = EnclaveState::kUnloaded;
  size_t code_size_ = 0;
  crypto::Measurement measurement_{};
  crypto::EnclaveKeyPair keypair_{};
  bool booted_ = false;
  SimulatedMemoryRegion private_region_;
  SimulatedMemoryRegion shared_region_;
  int core_id_ = -1;
  CorePool& pool_;
  const crypto::PlatformIdentity& platform_;
  SwitchLedger ledger_;
  Handler handler_;
  TraceSink trace_;
};

}  // namespace omg::enclave

#endif  // OMG_ENCLAVE_HPP_
