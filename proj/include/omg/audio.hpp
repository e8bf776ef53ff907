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
// WAVE ingestion and framing for the keyword-spotting front end. The
// standard pipeline takes 1 s mono clips at 16 kHz and slices them into
// 49 windows of 30 ms with a 20 ms shift.

#ifndef OMG_AUDIO_HPP_
#define OMG_AUDIO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "omg/bytes.hpp"

namespace omg::audio {

inline constexpr uint32_t kStandardRate = 16000;
inline constexpr size_t kClipSamples = 16000;     // 1 s
inline constexpr size_t kWindowSamples = 480;     // 30 ms
inline constexpr size_t kHopSamples = 320;        // 20 ms
inline constexpr size_t kFrameCount =
    (kClipSamples - kWindowSamples) / kHopSamples + 1;  // 49

struct AudioClip {
  std::vector<int16_t> samples;  // mono, signed 16-bit PCM
  uint32_t sample_rate = kStandardRate;

  double duration_seconds() const {
    return sample_rate == 0
               ? 0.0
               : static_cast<double>(samples.size()) / sample_rate;
  }
  bool operator==(const AudioClip&) const = default;
};

// Accepts RIFF/WAVE, PCM format code 1, 16-bit, mono. Throws
// UnsupportedFormatError (stereo, float, compressed, other bit depths) or
// MalformedDataError (bad magic, declared sizes past the end of the file).
AudioClip read_wav(ByteSpan bytes);
AudioClip read_wav_file(const std::filesystem::path& path);

Bytes write_wav(const AudioClip& clip);
void write_wav_file(const std::filesystem::path& path, const AudioClip& clip);

// Window i covers samples [320*i, 320*i + 480). Requires a 16000-sample
// clip at 16 kHz; throws MalformedDataError otherwise.
std::array<std::span<const int16_t>, kFrameCount> frame(const AudioClip& clip);

}  // namespace omg::audio

#endif  // OMG_AUDIO_HPP_
