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

#include "omg/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "omg/audio.hpp"

namespace omg::audio {

namespace {

constexpr int kStages = 9;  // log2(512)
static_assert((1u << kStages) == kFftSize);

// Quarter-wave resolution sine table covering [0, 2*pi), Q15.
struct TwiddleTable {
  std::array<int16_t, kFftSize> sine;
  std::array<uint16_t, kFftSize> bitrev;

  TwiddleTable() {
    for (size_t i = 0; i < kFftSize; ++i) {
      double angle = 2.0 * std::numbers::pi * static_cast<double>(i) /
                     static_cast<double>(kFftSize);
      sine[i] = static_cast<int16_t>(std::lround(32767.0 * std::sin(angle)));
    }
    for (size_t i = 0; i < kFftSize; ++i) {
      uint16_t r = 0;
      for (int b = 0; b < kStages; ++b) {
        r = static_cast<uint16_t>((r << 1) | ((i >> b) & 1));
      }
      bitrev[i] = r;
    }
  }
};

const TwiddleTable& table() {
  static const TwiddleTable t;
  return t;
}

// Q15 product with rounding. Returns int32 so a +/-32768 * -32767 corner
// cannot wrap before the stage scale.
inline int32_t q15_mul(int16_t a, int16_t b) {
  return (static_cast<int32_t>(a) * b + 0x4000) >> 15;
}

// Per-stage scale: halve with rounding, saturated to Q15. Rounding slop can
// push full-scale inputs a few LSB past 32767.
inline int16_t halve(int32_t v) {
  int32_t h = (v + 1) >> 1;
  if (h > 32767) h = 32767;
  if (h < -32768) h = -32768;
  return static_cast<int16_t>(h);
}

}  // namespace

void fft_q15(std::span<int16_t> re, std::span<int16_t> im) {
  if (re.size() != kFftSize || im.size() != kFftSize) {
    throw std::invalid_argument("fft_q15: buffers must be 512 long");
  }
  const TwiddleTable& t = table();

  for (size_t i = 0; i < kFftSize; ++i) {
    size_t j = t.bitrev[i];
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }

  for (size_t half = 1; half < kFftSize; half <<= 1) {
    const size_t step = kFftSize / (2 * half);  // twiddle index stride
    for (size_t group = 0; group < kFftSize; group += 2 * half) {
      for (size_t k = 0; k < half; ++k) {
        const size_t tw = k * step;
        // e^{-i theta} = cos - i sin; cos(x) = sin(x + pi/2).
        const int16_t wr = t.sine[(tw + kFftSize / 4) & (kFftSize - 1)];
        const int16_t wi = static_cast<int16_t>(-t.sine[tw]);

        const size_t a = group + k;
        const size_t b = a + half;
        const int32_t tr = q15_mul(re[b], wr) - q15_mul(im[b], wi);
        const int32_t ti = q15_mul(re[b], wi) + q15_mul(im[b], wr);
        const int32_t ar = re[a];
        const int32_t ai = im[a];
        re[a] = halve(ar + tr);
        im[a] = halve(ai + ti);
        re[b] = halve(ar - tr);
        im[b] = halve(ai - ti);
      }
    }
  }
}

std::array<int32_t, kSpectrumBins> spectrum(std::span<const int16_t> window) {
  if (window.size() != kWindowSamples) {
    throw std::invalid_argument("spectrum: window must be 480 samples");
  }
  std::array<int16_t, kFftSize> re{};
  std::array<int16_t, kFftSize> im{};
  std::copy(window.begin(), window.end(), re.begin());

  fft_q15(re, im);

  std::array<int32_t, kSpectrumBins> mags;
  for (size_t k = 0; k < kSpectrumBins; ++k) {
    const int64_t power = static_cast<int64_t>(re[k]) * re[k] +
                          static_cast<int64_t>(im[k]) * im[k];
    // Exact integer square root; power < 2^31 so the double round-trip is
    // correct after the one-step adjustment.
    auto r = static_cast<int64_t>(std::sqrt(static_cast<double>(power)));
    while (r * r > power) --r;
    while ((r + 1) * (r + 1) <= power) ++r;
    mags[k] = static_cast<int32_t>(r);
  }
  return mags;
}

}  // namespace omg::audio
