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
// Spawns the real binary (path from OMG_BIN) and checks output and exit
// codes, including the documented error-path codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "omg/audio.hpp"
#include "omg/errors.hpp"
#include "omg/model.hpp"
#include "testutil.hpp"

using namespace omg;

namespace {

std::string bin() {
  const char* path = std::getenv("OMG_BIN");
  REQUIRE_MESSAGE(path != nullptr, "OMG_BIN must point at the omg binary");
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  std::string cmd = bin() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buffer[512];
  while (fgets(buffer, sizeof(buffer), pipe) != nullptr) {
    result.output += buffer;
  }
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace

TEST_CASE("gen-model writes a loadable TCV1 file in both encodings") {
  test::TempDir dir;
  auto f32 = (dir.path() / "m.tcv1").string();
  auto q8 = (dir.path() / "m8.tcv1").string();
  CHECK(run("gen-model --out " + f32 + " --seed 3").exit_code == 0);
  CHECK(run("gen-model --out " + q8 + " --seed 3 --quantize").exit_code == 0);
  nn::TinyConvModel a = nn::load_model_file(f32);
  nn::TinyConvModel b = nn::load_model_file(q8);
  CHECK(a.fc_in() == 4400);
  CHECK(b.fc_in() == 4400);
  CHECK(std::filesystem::file_size(q8) < std::filesystem::file_size(f32) / 3);
}

TEST_CASE("fingerprint dumps 49 CSV rows") {
  test::TempDir dir;
  auto wav = dir.path() / "tone.wav";
  audio::write_wav_file(wav, test::sine_clip(1000.0, 20000.0));
  RunResult result = run("fingerprint " + wav.string());
  CHECK(result.exit_code == 0);
  CHECK(std::count(result.output.begin(), result.output.end(), '\n') == 49);
}

TEST_CASE("fingerprint rejects a stereo WAV with the documented exit code") {
  test::TempDir dir;
  auto wav = dir.path() / "stereo.wav";
  // Hand-built stereo header.
  Bytes bytes = audio::write_wav(test::silence_clip());
  bytes[22] = 2;  // channel count
  std::ofstream(wav, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  RunResult result = run("fingerprint " + wav.string());
  CHECK(result.exit_code ==
        static_cast<int>(ErrorCode::kUnsupportedFormat));
  CHECK(result.output.find("unsupported-format") != std::string::npos);
}

TEST_CASE("bench runs in both modes and prints machine-readable records") {
  test::TempDir dir;
  auto clips = dir.path() / "clips";
  REQUIRE(run("gen-fixtures --out " + clips.string() + " --count 4 --seed 2")
              .exit_code == 0);

  RunResult unprotected =
      run("bench --test-set " + clips.string() + " --unprotected --machine");
  CHECK(unprotected.exit_code == 0);
  CHECK(unprotected.output.find("bench mode=unprotected clips=4") !=
        std::string::npos);

  RunResult prot =
      run("bench --test-set " + clips.string() + " --protected --machine");
  CHECK(prot.exit_code == 0);
  CHECK(prot.output.find("bench mode=protected clips=4") != std::string::npos);
  CHECK(prot.output.find("switches=10 switch_us=3000") != std::string::npos);

  RunResult both = run("bench --test-set " + clips.string());
  CHECK(both.exit_code == static_cast<int>(ErrorCode::kMalformedData));
}

TEST_CASE("demo-attack passes every scenario and rejects unknown ones") {
  RunResult all = run("demo-attack");
  CHECK(all.exit_code == 0);
  for (const char* name :
       {"tamper-model", "rollback", "revoke", "tamper-enclave", "os-read"}) {
    CAPTURE(name);
    CHECK(all.output.find(std::string("PASS ") + name) != std::string::npos);
  }
  CHECK(all.output.find("FAIL") == std::string::npos);
  CHECK(run("demo-attack --scenario nope").exit_code ==
        static_cast<int>(ErrorCode::kMalformedData));
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run("").exit_code != 0);
  CHECK(run("bench").exit_code != 0);  // missing --test-set
}

TEST_CASE("vendor-serve, enclave-run and client-transcribe interoperate") {
  test::TempDir dir;
  auto model = (dir.path() / "m.tcv1").string();
  auto code = (dir.path() / "code.bin").string();
  auto storage = (dir.path() / "storage").string();
  auto clips = (dir.path() / "clips").string();
  REQUIRE(run("gen-model --out " + model + " --seed 7").exit_code == 0);
  std::ofstream(code) << "tcp test enclave image";
  REQUIRE(run("gen-fixtures --out " + clips + " --count 2 --seed 5")
              .exit_code == 0);

  // Launch the vendor, scrape its port.
  std::string vendor_log = (dir.path() / "vendor.log").string();
  std::string vendor_cmd = bin() + " vendor-serve --model " + model +
                           " --code " + code +
                           " --listen 127.0.0.1:0 > " + vendor_log +
                           " 2>&1 & echo $!";
  FILE* vp = popen(vendor_cmd.c_str(), "r");
  REQUIRE(vp != nullptr);
  char pid_buf[32] = {0};
  REQUIRE(fgets(pid_buf, sizeof(pid_buf), vp) != nullptr);
  pclose(vp);
  int vendor_pid = std::atoi(pid_buf);

  auto wait_for_line = [](const std::string& path, const std::string& token,
                          int tries = 100) -> std::string {
    for (int i = 0; i < tries; ++i) {
      std::ifstream in(path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.find(token) != std::string::npos) return line;
      }
      usleep(50 * 1000);
    }
    return "";
  };

  std::string vline = wait_for_line(vendor_log, "listening on");
  REQUIRE_FALSE(vline.empty());
  std::string vendor_port = vline.substr(vline.rfind(':') + 1);

  // Launch the enclave host against it.
  std::string enclave_log = (dir.path() / "enclave.log").string();
  std::string enclave_cmd =
      bin() + " enclave-run --code " + code + " --storage " + storage +
      " --vendor 127.0.0.1:" + vendor_port +
      " --listen 127.0.0.1:0 --mic-fixture " + clips + " > " + enclave_log +
      " 2>&1 & echo $!";
  FILE* ep = popen(enclave_cmd.c_str(), "r");
  REQUIRE(ep != nullptr);
  REQUIRE(fgets(pid_buf, sizeof(pid_buf), ep) != nullptr);
  pclose(ep);
  int enclave_pid = std::atoi(pid_buf);

  std::string eline = wait_for_line(enclave_log, "ready on");
  REQUIRE_FALSE(eline.empty());
  std::string enclave_port = eline.substr(eline.rfind(':') + 1);

  // Inline transcription.
  auto wav = dir.path() / "query.wav";
  audio::write_wav_file(wav, test::sine_clip(440.0, 12000.0));
  RunResult inline_result = run("client-transcribe " + wav.string() +
                                " --enclave 127.0.0.1:" + enclave_port);
  CHECK(inline_result.exit_code == 0);
  CHECK_FALSE(inline_result.output.empty());

  // Peripheral transcription drains the preloaded fixture clips.
  RunResult mic_result = run("client-transcribe --mic-fixture " + clips +
                             " --enclave 127.0.0.1:" + enclave_port);
  CHECK(mic_result.exit_code == 0);
  CHECK(std::count(mic_result.output.begin(), mic_result.output.end(), '\n') ==
        2);

  // Provisioned container sits on untrusted storage.
  CHECK(std::filesystem::exists(std::filesystem::path(storage) /
                                "model.sealed"));

  kill(enclave_pid, SIGTERM);
  kill(vendor_pid, SIGTERM);
  for (int i = 0; i < 100 && (kill(enclave_pid, 0) == 0 ||
                              kill(vendor_pid, 0) == 0); ++i) {
    usleep(20 * 1000);
  }
}

TEST_CASE("client-transcribe fails cleanly when no enclave is listening") {
  test::TempDir dir;
  auto wav = dir.path() / "query.wav";
  audio::write_wav_file(wav, test::silence_clip());
  RunResult result =
      run("client-transcribe " + wav.string() + " --enclave 127.0.0.1:1");
  CHECK(result.exit_code == static_cast<int>(ErrorCode::kTransport));
}
