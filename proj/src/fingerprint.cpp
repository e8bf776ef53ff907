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

#include "omg/fingerprint.hpp"

#include <cmath>

#include "omg/errors.hpp"

namespace omg::audio {

std::array<float, kPooledBins> pool_bins(
    std::span<const int32_t, kSpectrumBins> bins) {
  std::array<float, kPooledBins> pooled;
  for (size_t k = 0; k < kPooledBins; ++k) {
    const size_t begin = k * kPoolGroup;
    const size_t end = std::min(begin + kPoolGroup, kSpectrumBins);
    int64_t sum = 0;
    for (size_t i = begin; i < end; ++i) sum += bins[i];
    pooled[k] = static_cast<float>(sum) / static_cast<float>(end - begin);
  }
  return pooled;
}

Fingerprint Fingerprint::from_bytes(ByteSpan b) {
  Fingerprint fp;
  if (b.size() != fp.values.size()) {
    throw MalformedDataError("fingerprint must be 49*43 bytes");
  }
  std::copy(b.begin(), b.end(), fp.values.begin());
  return fp;
}

std::string Fingerprint::to_csv() const {
  std::string out;
  for (size_t r = 0; r < rows(); ++r) {
    for (size_t c = 0; c < cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += std::to_string(at(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

uint8_t quantize_magnitude(float pooled) {
  if (pooled <= 0.0f) return 0;
  const float scaled =
      pooled * 255.0f / static_cast<float>(kFullScaleMagnitude);
  const long q = std::lround(scaled);
  return static_cast<uint8_t>(q > 255 ? 255 : q);
}

Fingerprint make_fingerprint(const AudioClip& clip) {
  Fingerprint fp;
  auto windows = frame(clip);
  for (size_t i = 0; i < kFrameCount; ++i) {
    const auto mags = spectrum(windows[i]);
    const auto pooled = pool_bins(std::span<const int32_t, kSpectrumBins>(mags));
    for (size_t k = 0; k < kPooledBins; ++k) {
      fp.at(i, k) = quantize_magnitude(pooled[k]);
    }
  }
  return fp;
}

}  // namespace omg::audio
