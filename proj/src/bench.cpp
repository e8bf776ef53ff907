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

#include "omg/bench.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "omg/fingerprint.hpp"
#include "omg/inference.hpp"
#include "omg/protocol.hpp"

namespace omg::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::filesystem::path make_temp_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("omg-bench-" + std::to_string(::getpid()) + "-" +
              std::to_string(Clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

BenchReport run_bench(const nn::TinyConvModel& model,
                      const std::vector<audio::AudioClip>& clips,
                      bool protected_mode) {
  BenchReport report;
  report.protected_mode = protected_mode;
  report.per_query_ms.reserve(clips.size());
  report.labels.reserve(clips.size());
  for (const auto& clip : clips) {
    report.audio_seconds += clip.duration_seconds();
  }

  if (!protected_mode) {
    // Warm-up pass keeps first-touch costs out of the measurement.
    if (!clips.empty()) {
      nn::classify(audio::make_fingerprint(clips.front()), model);
    }
    for (const auto& clip : clips) {
      auto start = Clock::now();
      audio::Fingerprint fp = audio::make_fingerprint(clip);
      nn::Classification result = nn::classify(fp, model);
      report.per_query_ms.push_back(ms_since(start));
      report.labels.push_back(result.label);
    }
  } else {
    auto storage = make_temp_dir();
    SeededRng rng(0x0b57ac1e5eedull);
    auto platform = crypto::generate_platform_identity(rng);
    Bytes code = to_bytes("omg keyword recognition enclave image v1");
    Bytes model_bytes = nn::save_model(model);
    proto::Vendor vendor(platform.platform_cert, crypto::measure(code),
                         model_bytes, rng);
    proto::LocalVendorLink link(vendor);
    enclave::CorePool pool;
    proto::EnclaveHost host(code, storage, pool, platform, link, 0, rng);
    host.run_preparation();
    host.run_initialization();

    if (!clips.empty()) {
      host.feed_peripheral(clips.front());
      host.query_peripheral();  // warm-up, not measured
    }
    for (const auto& clip : clips) {
      host.feed_peripheral(clip);
      auto start = Clock::now();
      proto::ResultMsg result = host.query_peripheral();
      report.per_query_ms.push_back(ms_since(start));
      report.labels.push_back(result.label);
    }
    const auto& ledger = host.instance().ledger();
    report.switches = ledger.switches;
    report.switch_us = ledger.simulated_us;
    host.teardown();
    std::error_code ec;
    std::filesystem::remove_all(storage, ec);
  }

  for (double ms : report.per_query_ms) report.total_ms += ms;
  report.mean_ms = clips.empty() ? 0.0 : report.total_ms / clips.size();
  report.rtf = report.audio_seconds > 0.0
                   ? (report.total_ms / 1000.0) / report.audio_seconds
                   : 0.0;
  return report;
}

std::string BenchReport::table() const {
  char line[256];
  std::string out;
  out += "mode          clips   mean ms   total ms      RTF   switches   switch ms\n";
  std::snprintf(line, sizeof(line), "%-12s %6zu %9.3f %10.2f %8.4f %10llu %11.3f\n",
                protected_mode ? "protected" : "unprotected",
                per_query_ms.size(), mean_ms, total_ms, rtf,
                static_cast<unsigned long long>(switches),
                static_cast<double>(switch_us) / 1000.0);
  out += line;
  return out;
}

std::string BenchReport::machine_lines() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line),
                "bench mode=%s clips=%zu mean_ms=%.6f total_ms=%.6f rtf=%.6f "
                "audio_s=%.3f switches=%llu switch_us=%llu\n",
                protected_mode ? "protected" : "unprotected",
                per_query_ms.size(), mean_ms, total_ms, rtf, audio_seconds,
                static_cast<unsigned long long>(switches),
                static_cast<unsigned long long>(switch_us));
  out += line;
  for (size_t i = 0; i < per_query_ms.size(); ++i) {
    std::snprintf(line, sizeof(line), "query index=%zu ms=%.6f label=%s\n", i,
                  per_query_ms[i], labels[i].c_str());
    out += line;
  }
  return out;
}

}  // namespace omg::bench
