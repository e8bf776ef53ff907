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
// Weight container for the tiny_conv keyword model: one 2D convolution
// (8 filters, 8x10, stride 2), ReLU, and a dense layer onto 12 labels.
// The flat TCV1 byte format is documented in docs/wire_format.md; weights
// are stored as float32 or optionally as affine-quantized uint8.

#ifndef OMG_MODEL_HPP_
#define OMG_MODEL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "omg/bytes.hpp"

namespace omg::nn {

enum class Padding : uint8_t { kSame = 0, kValid = 1 };

struct ConvSpec {
  uint32_t in_h = 49, in_w = 43, in_c = 1;
  uint32_t filters = 8, kh = 8, kw = 10;
  uint32_t stride_h = 2, stride_w = 2;
  Padding padding = Padding::kSame;

  uint32_t out_h() const;
  uint32_t out_w() const;
  size_t weight_count() const {
    return size_t{filters} * kh * kw * in_c;
  }
  bool operator==(const ConvSpec&) const = default;
};

inline constexpr std::array<std::string_view, 12> kCanonicalLabels = {
    "silence", "unknown", "yes", "no",  "up",  "down",
    "left",    "right",   "on",  "off", "stop", "go"};

struct TinyConvModel {
  ConvSpec conv;
  // Filter-major layout: weight for (filter f, row y, col x, channel c) is
  // conv_weights[((f*kh + y)*kw + x)*in_c + c].
  std::vector<float> conv_weights;
  std::vector<float> conv_bias;
  // fc_weights[i*num_classes + o]: input i contributes to logit o. The
  // flattened input index i walks the feature map in (row, col, channel)
  // row-major order.
  std::vector<float> fc_weights;
  std::vector<float> fc_bias;
  std::vector<std::string> labels;

  size_t fc_in() const {
    return size_t{conv.out_h()} * conv.out_w() * conv.filters;
  }
  size_t num_classes() const { return fc_bias.size(); }

  // Shape consistency; throws MalformedDataError.
  void validate() const;
};

// TCV1 serialization. `quantize8` stores weight tensors as uint8 with a
// per-tensor affine (min, scale) header; biases stay float32.
Bytes save_model(const TinyConvModel& model, bool quantize8 = false);
TinyConvModel load_model(ByteSpan bytes);

void save_model_file(const std::filesystem::path& path,
                     const TinyConvModel& model, bool quantize8 = false);
TinyConvModel load_model_file(const std::filesystem::path& path);

// Deterministic pseudo-random weights for fixtures and benchmarks, with the
// canonical 12-label head.
TinyConvModel random_model(uint64_t seed);

}  // namespace omg::nn

#endif  // OMG_MODEL_HPP_
