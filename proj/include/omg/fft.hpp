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
// 512-point radix-2 fixed-point FFT in Q15 arithmetic with 32-bit
// accumulators. Every butterfly stage halves the data, so the output equals
// DFT(x) / 512 and cannot overflow 16 bits.

#ifndef OMG_FFT_HPP_
#define OMG_FFT_HPP_

#include <array>
#include <cstdint>
#include <span>

namespace omg::audio {

inline constexpr size_t kFftSize = 512;
inline constexpr size_t kSpectrumBins = 256;  // bins 0..255, Nyquist dropped

// In-place complex FFT over `re`/`im`, both exactly kFftSize long.
void fft_q15(std::span<int16_t> re, std::span<int16_t> im);

// Magnitude spectrum of one analysis window (exactly 480 samples): the
// window is zero-padded to 512 and |X_k| for k = 0..255 is returned, in
// units where a full-scale (Q15) input maps to kFullScaleMagnitude.
std::array<int32_t, kSpectrumBins> spectrum(std::span<const int16_t> window);

// Largest magnitude a 480-sample full-scale window can produce:
// 480/512 * 2^15. Anchors the fingerprint quantizer.
inline constexpr int32_t kFullScaleMagnitude = 30720;

}  // namespace omg::audio

#endif  // OMG_FFT_HPP_
