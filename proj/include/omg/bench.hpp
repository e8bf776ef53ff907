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
// Runtime benchmark over a clip set, with and without the enclave in the
// path. Protected mode runs the full protocol (clips enter through the
// simulated microphone, one park/resume cycle per query); unprotected mode
// calls the front end and classifier directly.

#ifndef OMG_BENCH_HPP_
#define OMG_BENCH_HPP_

#include <string>
#include <vector>

#include "omg/audio.hpp"
#include "omg/model.hpp"

namespace omg::bench {

struct BenchReport {
  bool protected_mode = false;
  std::vector<double> per_query_ms;
  std::vector<std::string> labels;
  double total_ms = 0.0;
  double mean_ms = 0.0;
  double audio_seconds = 0.0;
  double rtf = 0.0;  // total runtime / total audio duration
  uint64_t switches = 0;
  uint64_t switch_us = 0;

  std::string table() const;
  // One key=value record per line: a summary line plus one line per query.
  std::string machine_lines() const;
};

BenchReport run_bench(const nn::TinyConvModel& model,
                      const std::vector<audio::AudioClip>& clips,
                      bool protected_mode);

}  // namespace omg::bench

#endif  // OMG_BENCH_HPP_
