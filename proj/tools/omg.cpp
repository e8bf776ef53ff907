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
// Command-line surface wiring the three principals together. Exit codes:
// 0 success, 1 CLI usage error, otherwise the ErrorCode values documented
// in docs/cli.md.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "omg/bench.hpp"
#include "omg/crypto.hpp"
#include "omg/enclave.hpp"
#include "omg/errors.hpp"
#include "omg/fingerprint.hpp"
#include "omg/inference.hpp"
#include "omg/model.hpp"
#include "omg/modelstore.hpp"
#include "omg/net.hpp"
#include "omg/protocol.hpp"

namespace fs = std::filesystem;
using namespace omg;

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa{};
  sa.sa_handler = handle_signal;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (!in) throw IoError("short read from " + path.string());
  return data;
}

std::vector<fs::path> sorted_wavs(const fs::path& dir) {
  std::vector<fs::path> paths;
  if (!fs::is_directory(dir)) {
    throw IoError(dir.string() + " is not a directory");
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw IoError("no .wav files in " + dir.string());
  return paths;
}

// Deterministic platform identity shared by vendor-serve and enclave-run so
// separate processes agree on the trust root. A real deployment provisions
// this at manufacturing time; the simulation derives it from a seed flag.
crypto::PlatformIdentity platform_from_seed(uint64_t seed) {
  SeededRng rng(seed);
  return crypto::generate_platform_identity(rng);
}

constexpr uint64_t kDefaultPlatformSeed = 0x0601a7f0;

// --- gen-model ------------------------------------------------------------

struct GenModelArgs {
  std::string out;
  uint64_t seed = 7;
  bool quantize = false;
};

int cmd_gen_model(const GenModelArgs& args) {
  nn::TinyConvModel model = nn::random_model(args.seed);
  nn::save_model_file(args.out, model, args.quantize);
  std::printf("wrote %s (%zu bytes, %s)\n", args.out.c_str(),
              fs::file_size(args.out) ? static_cast<size_t>(fs::file_size(args.out)) : 0,
              args.quantize ? "q8" : "f32");
  return 0;
}

// --- gen-fixtures ----------------------------------------------------------

struct GenFixturesArgs {
  std::string out;
  size_t count = 20;
  uint64_t seed = 11;
};

audio::AudioClip synth_clip(std::mt19937_64& gen) {
  audio::AudioClip clip;
  clip.samples.resize(audio::kClipSamples);
  const int kind = static_cast<int>(gen() % 3);
  const double freq = 100.0 + static_cast<double>(gen() % 3800);
  const double amp = 2000.0 + static_cast<double>(gen() % 14000);
  const double sweep = (kind == 1) ? 1.5 : 1.0;
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    double t = static_cast<double>(i) / audio::kStandardRate;
    double value = 0.0;
    if (kind == 2) {
      value = static_cast<double>(static_cast<int64_t>(gen() % 65536) - 32768);
      value = value / 32768.0 * amp;
    } else {
      value = amp * std::sin(2.0 * 3.14159265358979 * freq * t * sweep);
    }
    clip.samples[i] = static_cast<int16_t>(std::clamp(value, -32768.0, 32767.0));
  }
  return clip;
}

int cmd_gen_fixtures(const GenFixturesArgs& args) {
  fs::create_directories(args.out);
  std::mt19937_64 gen(args.seed);
  for (size_t i = 0; i < args.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu.wav", i);
    audio::write_wav_file(fs::path(args.out) / name, synth_clip(gen));
  }
  std::printf("wrote %zu clips to %s\n", args.count, args.out.c_str());
  return 0;
}

// --- fingerprint ------------------------------------------------------------

struct FingerprintArgs {
  std::string wav;
  std::string csv_out;
  std::string bin_out;
};

int cmd_fingerprint(const FingerprintArgs& args) {
  audio::AudioClip clip = audio::read_wav_file(args.wav);
  audio::Fingerprint fp = audio::make_fingerprint(clip);
  if (!args.bin_out.empty()) {
    std::ofstream out(args.bin_out, std::ios::binary | std::ios::trunc);
    Bytes b = fp.to_bytes();
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(b.size()));
  }
  if (!args.csv_out.empty()) {
    std::ofstream out(args.csv_out, std::ios::trunc);
    out << fp.to_csv();
  }
  if (args.csv_out.empty() && args.bin_out.empty()) {
    std::fputs(fp.to_csv().c_str(), stdout);
  }
  return 0;
}

// --- vendor-serve ------------------------------------------------------------

struct VendorServeArgs {
  std::string model;
  std::string code;
  std::string listen = "127.0.0.1:0";
  uint64_t platform_seed = kDefaultPlatformSeed;
  bool deny = false;
};

int cmd_vendor_serve(const VendorServeArgs& args) {
  install_signal_handlers();
  Bytes model_bytes = read_file(args.model);
  nn::load_model(model_bytes);  // reject broken models before serving
  Bytes code = read_file(args.code);

  auto platform = platform_from_seed(args.platform_seed);
  proto::Vendor vendor(platform.platform_cert, crypto::measure(code),
                       model_bytes);
  if (args.deny) vendor.set_default_authorized(false);

  auto [host, port] = net::parse_address(args.listen);
  if (host != "127.0.0.1") {
    throw MalformedDataError("vendor endpoint is loopback-only");
  }
  net::VendorEndpoint endpoint(vendor, port);
  std::printf("vendor listening on 127.0.0.1:%u\n", endpoint.port());
  std::fflush(stdout);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  endpoint.stop();
  return 0;
}

// --- enclave-run ------------------------------------------------------------

struct EnclaveRunArgs {
  std::string code;
  std::string storage;
  std::string vendor = "127.0.0.1:7443";
  std::string listen = "127.0.0.1:0";
  std::string mic_fixture;
  uint64_t platform_seed = kDefaultPlatformSeed;
  bool trace = false;
};

int cmd_enclave_run(const EnclaveRunArgs& args) {
  install_signal_handlers();
  Bytes code = read_file(args.code);
  fs::create_directories(args.storage);

  auto platform = platform_from_seed(args.platform_seed);
  auto [vhost, vport] = net::parse_address(args.vendor);
  net::TcpVendorLink vendor(vhost, vport);

  enclave::CorePool pool;
  enclave::TraceSink sink;
  if (args.trace) {
    sink = [](const std::string& line) {
      std::fprintf(stderr, "%s\n", line.c_str());
    };
  }
  proto::EnclaveHost host(code, args.storage, pool, platform, vendor, 0,
                          system_rng(), sink);
  proto::UserClient user(platform.platform_cert, crypto::measure(code));
  host.run_preparation(&user);
  host.run_initialization();
  std::printf("enclave_pk=%s\n", hex_encode(host.enclave_pk()).c_str());

  if (!args.mic_fixture.empty()) {
    for (const auto& path : sorted_wavs(args.mic_fixture)) {
      host.feed_peripheral(audio::read_wav_file(path));
    }
  }

  auto [lhost, lport] = net::parse_address(args.listen);
  if (lhost != "127.0.0.1") {
    throw MalformedDataError("enclave endpoint is loopback-only");
  }
  net::EnclaveEndpoint endpoint(host, lport);
  std::printf("enclave ready on 127.0.0.1:%u\n", endpoint.port());
  std::fflush(stdout);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  endpoint.stop();
  const auto& ledger = host.instance().ledger();
  std::printf("ledger switches=%llu simulated_ms=%.3f\n",
              static_cast<unsigned long long>(ledger.switches),
              ledger.simulated_ms());
  host.teardown();
  return 0;
}

// --- client-transcribe -------------------------------------------------------

struct TranscribeArgs {
  std::string wav;
  std::string mic_fixture;
  std::string enclave = "127.0.0.1:7444";
};

int cmd_client_transcribe(const TranscribeArgs& args) {
  if (args.wav.empty() == args.mic_fixture.empty()) {
    throw MalformedDataError(
        "pass exactly one of a WAV path or --mic-fixture DIR");
  }
  auto [host, port] = net::parse_address(args.enclave);
  net::TcpStream stream = net::TcpStream::connect(host, port);
  proto::SessionId session{};
  system_rng().fill(session);

  auto ask = [&](const proto::QueryMsg& query) {
    proto::ProtocolMessage response =
        stream.round_trip(proto::make_message(session, query));
    if (const auto* error = std::get_if<proto::ErrorMsg>(&response.body)) {
      for (ErrorCode code :
           {ErrorCode::kUnsupportedFormat, ErrorCode::kMalformedData,
            ErrorCode::kWrongState, ErrorCode::kEmptyPeripheral,
            ErrorCode::kLicenseDenied}) {
        if (error->code == error_code_name(code)) {
          throw Error(code, error->detail);
        }
      }
      throw TransportError(error->code + ": " + error->detail);
    }
    return std::get<proto::ResultMsg>(response.body);
  };

  if (!args.wav.empty()) {
    proto::QueryMsg query;
    query.clip = audio::read_wav_file(args.wav);
    proto::ResultMsg result = ask(query);
    std::printf("%s %.4f\n", result.label.c_str(), result.score);
  } else {
    for (const auto& path : sorted_wavs(args.mic_fixture)) {
      proto::ProtocolMessage fed = stream.round_trip(proto::make_message(
          session, proto::FeedPeripheralMsg{audio::read_wav_file(path)}));
      if (!std::holds_alternative<proto::AckMsg>(fed.body)) {
        throw TransportError("peripheral feed rejected");
      }
      proto::QueryMsg query;
      query.from_peripheral = true;
      proto::ResultMsg result = ask(query);
      std::printf("%s %.4f %s\n", result.label.c_str(), result.score,
                  path.filename().c_str());
    }
  }
  return 0;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string test_set;
  std::string model;
  uint64_t model_seed = 7;
  bool protected_mode = false;
  bool unprotected_mode = false;
  bool machine = false;
};

int cmd_bench(const BenchArgs& args) {
  if (args.protected_mode == args.unprotected_mode) {
    throw MalformedDataError("pass exactly one of --protected/--unprotected");
  }
  nn::TinyConvModel model = args.model.empty()
                                ? nn::random_model(args.model_seed)
                                : nn::load_model_file(args.model);
  std::vector<audio::AudioClip> clips;
  for (const auto& path : sorted_wavs(args.test_set)) {
    clips.push_back(audio::read_wav_file(path));
  }
  bench::BenchReport report =
      bench::run_bench(model, clips, args.protected_mode);
  std::fputs(report.table().c_str(), stdout);
  if (args.machine) std::fputs(report.machine_lines().c_str(), stdout);
  return 0;
}

// --- demo-attack ---------------------------------------------------------------

struct AttackArgs {
  std::string scenario = "all";
};

struct AttackRig {
  SeededRng rng{0xa77ac7ull};
  crypto::PlatformIdentity platform = crypto::generate_platform_identity(rng);
  Bytes code = to_bytes("omg keyword recognition enclave image v1");
  Bytes model_bytes = nn::save_model(nn::random_model(7));
  fs::path storage;
  enclave::CorePool pool;
  proto::Vendor vendor;
  proto::LocalVendorLink link{vendor};
  proto::EnclaveHost host;

  explicit AttackRig(const fs::path& dir, bool tamper_code = false)
      : storage(dir),
        vendor(platform.platform_cert, crypto::measure(code), model_bytes,
               rng),
        host(code, storage, pool, platform, link, 0, rng) {
    if (tamper_code) {
      host.instance().tamper_private_region_for_test(0, 0x01);
    }
  }
};

fs::path attack_dir() {
  auto dir = fs::temp_directory_path() /
             ("omg-attack-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool scenario_tamper_model(const fs::path& dir) {
  AttackRig rig(dir);
  rig.host.run_preparation();
  auto path = rig.host.app().container_path();
  Bytes raw = read_file(path);
  raw[raw.size() / 2] ^= 0x40;  // flip a ciphertext bit
  std::ofstream(path, std::ios::binary | std::ios::trunc)
      .write(reinterpret_cast<const char*>(raw.data()),
             static_cast<std::streamsize>(raw.size()));
  try {
    rig.host.run_initialization();
    return false;
  } catch (const UnsealFailureError&) {
    return rig.host.app().phase() != proto::EnclaveApp::Phase::kOperation;
  }
}

bool scenario_rollback(const fs::path& dir) {
  AttackRig rig(dir);
  rig.host.run_preparation();
  rig.host.run_initialization();
  Bytes old_container = read_file(rig.host.app().container_path());

  rig.vendor.rotate_model(nn::save_model(nn::random_model(8)));
  rig.host.run_preparation();  // fetches the v2 container
  // Adversary swaps the stored container back to v1.
  std::ofstream(rig.host.app().container_path(),
                std::ios::binary | std::ios::trunc)
      .write(reinterpret_cast<const char*>(old_container.data()),
             static_cast<std::streamsize>(old_container.size()));
  try {
    rig.host.run_initialization();
    return false;
  } catch (const RollbackDetectedError&) {
    return true;
  } catch (const UnsealFailureError&) {
    return true;  // the enforcing mechanism
  }
}

bool scenario_revoke(const fs::path& dir) {
  AttackRig rig(dir);
  rig.host.run_preparation();
  rig.vendor.revoke(rig.host.enclave_pk());
  try {
    rig.host.run_initialization();
    return false;
  } catch (const LicenseDeniedError&) {
    return rig.host.app().phase() != proto::EnclaveApp::Phase::kOperation;
  }
}

bool scenario_tamper_enclave(const fs::path& dir) {
  AttackRig rig(dir, /*tamper_code=*/true);
  try {
    rig.host.run_preparation();
    return false;
  } catch (const AttestationRejectedError&) {
    // No model must have been provisioned.
    return !fs::exists(rig.host.app().container_path());
  }
}

bool scenario_os_read(const fs::path& dir) {
  AttackRig rig(dir);
  auto& region = rig.host.instance().private_region();
  if (enclave::os_read_memory(region)) return false;  // SETUP
  rig.host.run_preparation();
  if (enclave::os_read_memory(region)) return false;  // BOOTED/EXECUTING
  rig.host.run_initialization();
  if (enclave::os_read_memory(region)) return false;
  rig.host.feed_peripheral(audio::AudioClip{
      std::vector<int16_t>(audio::kClipSamples, 0), audio::kStandardRate});
  rig.host.query_peripheral();
  if (enclave::os_read_memory(region)) return false;  // PARKED
  rig.host.teardown();
  auto contents = enclave::os_read_memory(region);
  if (!contents) return false;  // must be readable after teardown
  return std::all_of(contents->begin(), contents->end(),
                     [](uint8_t b) { return b == 0; });
}

int cmd_demo_attack(const AttackArgs& args) {
  struct Scenario {
    const char* name;
    bool (*run)(const fs::path&);
    const char* defense;
  };
  const Scenario scenarios[] = {
      {"tamper-model", scenario_tamper_model, "AEAD unseal failure"},
      {"rollback", scenario_rollback, "nonce freshness + key mismatch"},
      {"revoke", scenario_revoke, "key release denied"},
      {"tamper-enclave", scenario_tamper_enclave,
       "measurement mismatch, no provisioning"},
      {"os-read", scenario_os_read, "locked memory unreadable until zeroized"},
  };
  bool all_ok = true;
  bool matched = false;
  for (const auto& s : scenarios) {
    if (args.scenario != "all" && args.scenario != s.name) continue;
    matched = true;
    fs::path dir = attack_dir();
    bool ok = false;
    try {
      ok = s.run(dir);
    } catch (const Error& e) {
      std::fprintf(stderr, "%s raised %s\n", s.name, e.what());
      ok = false;
    }
    fs::remove_all(dir);
    std::printf("%s %-14s defense: %s\n", ok ? "PASS" : "FAIL", s.name,
                s.defense);
    all_ok = all_ok && ok;
  }
  if (!matched) throw MalformedDataError("unknown scenario " + args.scenario);
  return all_ok ? 0 : static_cast<int>(ErrorCode::kWrongState);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline model guard: enclave-protected keyword recognition"};
  app.require_subcommand(1);

  GenModelArgs gen_model;
  auto* sc_gen_model = app.add_subcommand("gen-model", "write a TCV1 model");
  sc_gen_model->add_option("--out", gen_model.out, "output path")->required();
  sc_gen_model->add_option("--seed", gen_model.seed, "weight seed");
  sc_gen_model->add_flag("--quantize", gen_model.quantize,
                         "store weights as uint8");

  GenFixturesArgs gen_fixtures;
  auto* sc_gen_fixtures =
      app.add_subcommand("gen-fixtures", "write synthetic 1 s WAV clips");
  sc_gen_fixtures->add_option("--out", gen_fixtures.out, "output directory")
      ->required();
  sc_gen_fixtures->add_option("--count", gen_fixtures.count, "clip count");
  sc_gen_fixtures->add_option("--seed", gen_fixtures.seed, "clip seed");

  FingerprintArgs fingerprint;
  auto* sc_fingerprint =
      app.add_subcommand("fingerprint", "dump the 49x43 fingerprint of a clip");
  sc_fingerprint->add_option("wav", fingerprint.wav, "input WAV")->required();
  sc_fingerprint->add_option("--csv", fingerprint.csv_out, "CSV output path");
  sc_fingerprint->add_option("--bin", fingerprint.bin_out,
                             "flat binary output path");

  VendorServeArgs vendor_serve;
  auto* sc_vendor = app.add_subcommand("vendor-serve", "run the vendor endpoint");
  sc_vendor->add_option("--model", vendor_serve.model, "TCV1 model file")
      ->required()
      ->envname("OMG_MODEL");
  sc_vendor->add_option("--code", vendor_serve.code,
                        "expected enclave code image")
      ->required()
      ->envname("OMG_CODE_IMAGE");
  sc_vendor->add_option("--listen", vendor_serve.listen, "host:port (0 = any)")
      ->envname("OMG_LISTEN_ADDR");
  sc_vendor->add_option("--platform-seed", vendor_serve.platform_seed,
                        "simulated device trust root seed");
  sc_vendor->add_flag("--deny", vendor_serve.deny,
                      "register new enclaves with a revoked license");

  EnclaveRunArgs enclave_run;
  auto* sc_enclave =
      app.add_subcommand("enclave-run", "prepare, initialize and serve queries");
  sc_enclave->add_option("--code", enclave_run.code, "enclave code image")
      ->required()
      ->envname("OMG_CODE_IMAGE");
  sc_enclave->add_option("--storage", enclave_run.storage,
                         "untrusted storage directory")
      ->required()
      ->envname("OMG_STORAGE_DIR");
  sc_enclave->add_option("--vendor", enclave_run.vendor, "vendor host:port")
      ->envname("OMG_VENDOR_ADDR");
  sc_enclave->add_option("--listen", enclave_run.listen, "host:port (0 = any)")
      ->envname("OMG_LISTEN_ADDR");
  sc_enclave->add_option("--mic-fixture", enclave_run.mic_fixture,
                         "directory of WAVs preloading the microphone");
  sc_enclave->add_option("--platform-seed", enclave_run.platform_seed,
                         "simulated device trust root seed");
  sc_enclave->add_flag("--trace", enclave_run.trace,
                       "print lifecycle trace to stderr");

  TranscribeArgs transcribe;
  auto* sc_transcribe =
      app.add_subcommand("client-transcribe", "send queries to an enclave");
  sc_transcribe->add_option("wav", transcribe.wav, "WAV file to transcribe");
  sc_transcribe->add_option("--mic-fixture", transcribe.mic_fixture,
                            "feed a fixture directory through the microphone");
  sc_transcribe->add_option("--enclave", transcribe.enclave,
                            "enclave host:port")
      ->envname("OMG_ENCLAVE_ADDR");

  BenchArgs bench_args;
  auto* sc_bench = app.add_subcommand("bench", "runtime benchmark over a clip set");
  sc_bench->add_option("--test-set", bench_args.test_set, "directory of WAVs")
      ->required();
  sc_bench->add_option("--model", bench_args.model, "TCV1 model file")
      ->envname("OMG_MODEL");
  sc_bench->add_option("--model-seed", bench_args.model_seed,
                       "seed when no model file is given");
  sc_bench->add_flag("--protected", bench_args.protected_mode,
                     "run through the enclave");
  sc_bench->add_flag("--unprotected", bench_args.unprotected_mode,
                     "run the bare pipeline");
  sc_bench->add_flag("--machine", bench_args.machine,
                     "also print key=value records");

  AttackArgs attack;
  auto* sc_attack =
      app.add_subcommand("demo-attack", "drive the adversary harness");
  sc_attack->add_option("--scenario", attack.scenario,
                        "tamper-model|rollback|revoke|tamper-enclave|os-read|all");

  try {
    app.parse(argc, argv);
    if (*sc_gen_model) return cmd_gen_model(gen_model);
    if (*sc_gen_fixtures) return cmd_gen_fixtures(gen_fixtures);
    if (*sc_fingerprint) return cmd_fingerprint(fingerprint);
    if (*sc_vendor) return cmd_vendor_serve(vendor_serve);
    if (*sc_enclave) return cmd_enclave_run(enclave_run);
    if (*sc_transcribe) return cmd_client_transcribe(transcribe);
    if (*sc_bench) return cmd_bench(bench_args);
    if (*sc_attack) return cmd_demo_attack(attack);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", error_code_name(e.code()),
                 e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 70;
  }
  return 0;
}
