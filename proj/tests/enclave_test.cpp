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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "omg/enclave.hpp"
#include "omg/errors.hpp"
#include "testutil.hpp"

using namespace omg;
using namespace omg::enclave;

namespace {

crypto::PlatformIdentity test_platform() {
  SeededRng rng(500);
  return crypto::generate_platform_identity(rng);
}

Nonce nonce_of(uint8_t fill) {
  Nonce n;
  n.fill(fill);
  return n;
}

Bytes echo_handler(EnclaveInstance&, ByteSpan request) {
  return Bytes(request.begin(), request.end());
}

audio::AudioClip tiny_clip(int16_t value) {
  return {std::vector<int16_t>(16, value), audio::kStandardRate};
}

}  // namespace

TEST_CASE("setup locks the private region and reserves the core") {
  auto platform = test_platform();
  CorePool pool;
  EnclaveInstance enclave(to_bytes("code"), 3, pool, platform);

  CHECK(enclave.state() == EnclaveState::kSetup);
  CHECK(enclave.private_region().locked);
  CHECK(pool.is_reserved(3));
  CHECK_FALSE(os_read_memory(enclave.private_region()).has_value());
  CHECK(os_read_memory(enclave.shared_region()).has_value());

  // Same core again: busy.
  CHECK_THROWS_AS(EnclaveInstance(to_bytes("other"), 3, pool, platform),
                  CoreBusyError);
  CHECK_THROWS_AS(EnclaveInstance(to_bytes("other"), 99, pool, platform),
                  CoreBusyError);
}

TEST_CASE("boot measures the region and the report verifies") {
  auto platform = test_platform();
  CorePool pool;
  Bytes code = to_bytes("keyword recognition build 1");
  EnclaveInstance enclave(code, 0, pool, platform);

  auto report = enclave.boot(nonce_of(0x11));
  CHECK(enclave.state() == EnclaveState::kBooted);
  CHECK(enclave.measurement() == crypto::measure(code));
  CHECK(crypto::verify_attestation(report, platform.platform_cert,
                                   crypto::measure(code))
            .accepted());
  CHECK_THROWS_AS(enclave.boot(nonce_of(0x12)), WrongStateError);
}

TEST_CASE("pre-boot tamper produces a mismatching measurement") {
  auto platform = test_platform();
  CorePool pool;
  Bytes code = to_bytes("keyword recognition build 1");
  EnclaveInstance enclave(code, 0, pool, platform);
  enclave.tamper_private_region_for_test(5, 0x01);

  auto report = enclave.boot(nonce_of(0x13));
  auto verdict = crypto::verify_attestation(report, platform.platform_cert,
                                            crypto::measure(code));
  CHECK(verdict.code == crypto::AttestVerdict::Code::kMeasurementMismatch);
}

TEST_CASE("execute stages request and response through the shared region") {
  auto platform = test_platform();
  CorePool pool;
  EnclaveInstance enclave(to_bytes("code"), 0, pool, platform);
  enclave.register_handler(echo_handler);

  CHECK_THROWS_AS(enclave.execute(to_bytes("too early")), WrongStateError);
  enclave.boot(nonce_of(1));
  Bytes response = enclave.execute(to_bytes("ping"));
  CHECK(response == to_bytes("ping"));
  CHECK(enclave.state() == EnclaveState::kExecuting);
  CHECK(os_read_memory(enclave.shared_region()) == response);
}

TEST_CASE("world_switch_read costs exactly two switches of 0.3 ms each") {
  auto platform = test_platform();
  CorePool pool;
  EnclaveInstance enclave(to_bytes("code"), 0, pool, platform);
  enclave.register_handler(echo_handler);
  enclave.boot(nonce_of(2));
  enclave.execute(to_bytes("warm"));

  SimulatedPeripheral mic;
  mic.feed(tiny_clip(100));
  audio::AudioClip clip = enclave.world_switch_read(mic);
  CHECK(clip == tiny_clip(100));
  CHECK(enclave.ledger().switches == 2);
  CHECK(enclave.ledger().simulated_us == 600);
  CHECK(enclave.ledger().simulated_ms() == doctest::Approx(0.6).epsilon(1e-12));

  // Additivity: k reads cost 2k switches and 0.6k ms.
  for (int k = 2; k <= 5; ++k) {
    mic.feed(tiny_clip(static_cast<int16_t>(k)));
    enclave.world_switch_read(mic);
    CHECK(enclave.ledger().switches == 2u * k);
    CHECK(enclave.ledger().simulated_us == 600u * k);
  }

  CHECK_THROWS_AS(enclave.world_switch_read(mic), EmptyPeripheralError);
  CHECK(enclave.ledger().switches == 10);  // failed read does not switch

  // The clip's samples land in the shared region.
  auto staged = os_read_memory(enclave.shared_region());
  REQUIRE(staged.has_value());
  CHECK(staged->size() == 16 * 2);
}

TEST_CASE("park keeps memory locked; resume restores execution") {
  auto platform = test_platform();
  CorePool pool(2);
  EnclaveInstance enclave(to_bytes("code"), 0, pool, platform);
  enclave.register_handler(echo_handler);
  enclave.boot(nonce_of(3));
  enclave.execute(to_bytes("x"));
  enclave.write_private_data(0, to_bytes("decrypted model"));

  enclave.park();
  CHECK(enclave.state() == EnclaveState::kParked);
  CHECK(enclave.core_id() == -1);
  CHECK_FALSE(pool.is_reserved(0));
  CHECK(enclave.private_region().locked);
  CHECK_FALSE(os_read_memory(enclave.private_region()).has_value());

  Bytes before = enclave.private_region().contents;
  enclave.resume();
  CHECK(enclave.state() == EnclaveState::kExecuting);
  CHECK(enclave.core_id() >= 0);
  CHECK(enclave.private_region().contents == before);  // bit-exact
  CHECK(to_string(enclave.read_private_data(0, 15)) == "decrypted model");

  CHECK_THROWS_AS(enclave.resume(), WrongStateError);
  enclave.park();
  CHECK_THROWS_AS(enclave.park(), WrongStateError);
}

TEST_CASE("resume fails when the pool is exhausted") {
  auto platform = test_platform();
  CorePool pool(1);
  EnclaveInstance enclave(to_bytes("code"), 0, pool, platform);
  enclave.register_handler(echo_handler);
  enclave.boot(nonce_of(4));
  enclave.execute(to_bytes("x"));
  enclave.park();
  int other = pool.reserve_any();  // commodity OS grabs the core
  CHECK_THROWS_AS(enclave.resume(), CoreBusyError);
  pool.release(other);
  enclave.resume();
  CHECK(enclave.state() == EnclaveState::kExecuting);
}

TEST_CASE("teardown zeroizes, unlocks and releases") {
  auto platform = test_platform();
  CorePool pool;
  EnclaveInstance enclave(to_bytes("sensitive code"), 1, pool, platform);
  enclave.register_handler(echo_handler);
  enclave.boot(nonce_of(5));
  enclave.execute(to_bytes("x"));
  enclave.write_private_data(0, to_bytes("plaintext weights"));

  enclave.teardown();
  CHECK(enclave.state() == EnclaveState::kTorndown);
  CHECK_FALSE(enclave.private_region().locked);
  CHECK(enclave.private_region().zeroized);
  CHECK_FALSE(pool.is_reserved(1));

  auto contents = os_read_memory(enclave.private_region());
  REQUIRE(contents.has_value());
  CHECK_FALSE(contents->empty());
  for (uint8_t b : *contents) CHECK(b == 0);

  CHECK_THROWS_AS(enclave.execute(to_bytes("x")), WrongStateError);
  CHECK_THROWS_AS(enclave.teardown(), WrongStateError);
}

TEST_CASE("os writes to the locked region fail, and succeed after teardown") {
  auto platform = test_platform();
  CorePool pool;
  EnclaveInstance enclave(to_bytes("code"), 0, pool, platform);
  CHECK_FALSE(os_write_memory(enclave.private_region(), to_bytes("evil")));
  CHECK(os_write_memory(enclave.shared_region(), to_bytes("fine")));
  enclave.boot(nonce_of(6));
  enclave.teardown();
  CHECK(os_write_memory(enclave.private_region(), to_bytes("now writable")));
}

TEST_CASE("trace log uses key=value lines for transitions and switches") {
  auto platform = test_platform();
  CorePool pool;
  std::vector<std::string> lines;
  EnclaveInstance enclave(to_bytes("code"), 0, pool, platform,
                          [&lines](const std::string& l) { lines.push_back(l); });
  enclave.register_handler(echo_handler);
  enclave.boot(nonce_of(7));
  enclave.execute(to_bytes("x"));
  SimulatedPeripheral mic;
  mic.feed(tiny_clip(1));
  enclave.world_switch_read(mic);
  enclave.teardown();

  REQUIRE(lines.size() >= 5);
  size_t transitions = 0, switches = 0;
  for (const auto& line : lines) {
    CAPTURE(line);
    CHECK(line.find("ev=") == 0);
    if (line.find("ev=transition") == 0) {
      ++transitions;
      CHECK(line.find(" from=") != std::string::npos);
      CHECK(line.find(" to=") != std::string::npos);
    } else if (line.find("ev=world_switch") == 0) {
      ++switches;
      CHECK(line.find(" us=300") != std::string::npos);
    }
  }
  CHECK(transitions == 4);  // SETUP, BOOTED, EXECUTING, TORNDOWN
  CHECK(switches == 2);
}

// Random operation fuzzing: whatever sequence of calls the harness makes,
// observed transitions stay inside the allowed graph and the private region
// is unreadable from SETUP through teardown.
TEST_CASE("state machine fuzz: no illegal transition is ever observed") {
  const std::set<std::pair<EnclaveState, EnclaveState>> allowed = {
      {EnclaveState::kUnloaded, EnclaveState::kSetup},
      {EnclaveState::kSetup, EnclaveState::kBooted},
      {EnclaveState::kBooted, EnclaveState::kExecuting},
      {EnclaveState::kExecuting, EnclaveState::kParked},
      {EnclaveState::kParked, EnclaveState::kExecuting},
      {EnclaveState::kBooted, EnclaveState::kTorndown},
      {EnclaveState::kExecuting, EnclaveState::kTorndown},
      {EnclaveState::kParked, EnclaveState::kTorndown},
  };
  auto platform = test_platform();
  std::mt19937_64 gen(4242);

  for (int round = 0; round < 200; ++round) {
    CorePool pool(2);
    EnclaveInstance enclave(to_bytes("fuzz code"), 0, pool, platform);
    enclave.register_handler(echo_handler);
    SimulatedPeripheral mic;
    EnclaveState prev = enclave.state();
    CHECK(allowed.contains({EnclaveState::kUnloaded, prev}));

    for (int step = 0; step < 40; ++step) {
      int op = static_cast<int>(gen() % 7);
      try {
        switch (op) {
          case 0: enclave.boot(nonce_of(static_cast<uint8_t>(step))); break;
          case 1: enclave.execute(to_bytes("req")); break;
          case 2: enclave.park(); break;
          case 3: enclave.resume(); break;
          case 4: enclave.teardown(); break;
          case 5:
            if (gen() % 2) mic.feed(tiny_clip(1));
            enclave.world_switch_read(mic);
            break;
          case 6: {
            // Adversary pokes at memory mid-sequence.
            bool readable =
                os_read_memory(enclave.private_region()).has_value();
            CHECK(readable == (enclave.state() == EnclaveState::kTorndown));
            break;
          }
        }
      } catch (const Error&) {
        // Rejected operations must not move the state machine.
      }
      EnclaveState now = enclave.state();
      if (now != prev) {
        CAPTURE(static_cast<int>(prev));
        CAPTURE(static_cast<int>(now));
        CHECK(allowed.contains({prev, now}));
        prev = now;
      }
      // Ledger invariant holds at every step.
      CHECK(enclave.ledger().simulated_us ==
            enclave.ledger().switches * kWorldSwitchUs);
    }
  }
}
