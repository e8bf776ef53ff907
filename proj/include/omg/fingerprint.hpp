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
// Reduction of the magnitude spectrum to the 49x43 quantized fingerprint
// fed to the classifier: 256 bins pooled by averaging groups of 6 (the last
// group holds the remaining 4), then linear uint8 quantization anchored at
// the full-scale magnitude.

#ifndef OMG_FINGERPRINT_HPP_
#define OMG_FINGERPRINT_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "omg/audio.hpp"
#include "omg/bytes.hpp"
#include "omg/fft.hpp"

namespace omg::audio {

inline constexpr size_t kPooledBins = 43;
inline constexpr size_t kPoolGroup = 6;  // final group covers bins 252..255

// Grouped mean over the 256 magnitudes; group k covers [6k, 6k+6) for
// k = 0..41 and [252, 256) for k = 42, each averaged over its own size.
std::array<float, kPooledBins> pool_bins(
    std::span<const int32_t, kSpectrumBins> bins);

// 49 frames x 43 pooled bins, row-major, one row per frame.
struct Fingerprint {
  std::array<uint8_t, kFrameCount * kPooledBins> values{};

  static constexpr size_t rows() { return kFrameCount; }
  static constexpr size_t cols() { return kPooledBins; }
  uint8_t at(size_t frame, size_t bin) const {
    return values[frame * kPooledBins + bin];
  }
  uint8_t& at(size_t frame, size_t bin) {
    return values[frame * kPooledBins + bin];
  }

  Bytes to_bytes() const { return Bytes(values.begin(), values.end()); }
  static Fingerprint from_bytes(ByteSpan b);  // throws MalformedDataError
  std::string to_csv() const;
  bool operator==(const Fingerprint&) const = default;
};

// Linear map [0, kFullScaleMagnitude] -> [0, 255], saturating above.
uint8_t quantize_magnitude(float pooled);

// Inverse scale used by the classifier: q -> q / 255, the magnitude as a
// fraction of full scale.
inline float dequantize(uint8_t q) { return static_cast<float>(q) / 255.0f; }

// Full front end: frame -> spectrum -> pool -> quantize, 49 rows.
Fingerprint make_fingerprint(const AudioClip& clip);

}  // namespace omg::audio

#endif  // OMG_FINGERPRINT_HPP_
