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
// Forward pass: conv2d -> ReLU -> fully connected -> softmax. All feature
// maps are (row, col, channel) row-major float vectors; accumulation is in
// double so results are deterministic and match a reference loop closely.

#ifndef OMG_INFERENCE_HPP_
#define OMG_INFERENCE_HPP_

#include <span>
#include <string>
#include <vector>

#include "omg/fingerprint.hpp"
#include "omg/model.hpp"

namespace omg::nn {

// `input` is in_h*in_w*in_c floats. Output is out_h*out_w*filters floats.
// SAME padding centers the kernel with the surplus on the bottom/right.
std::vector<float> conv2d(std::span<const float> input, const ConvSpec& spec,
                          std::span<const float> weights,
                          std::span<const float> bias);

// Dequantizes the fingerprint (q/255) and applies the model's convolution.
std::vector<float> conv2d(const audio::Fingerprint& fp,
                          const TinyConvModel& model);

void relu(std::span<float> x);

// logits = W^T x + b over the flattened feature map.
std::vector<float> fully_connected(std::span<const float> x,
                                   const TinyConvModel& model);

// Numerically stable (max-subtracted). Double precision so the
// distribution sums to 1 to within accumulated rounding (< 1e-9).
std::vector<double> softmax(std::span<const float> logits);

struct Classification {
  std::string label;
  float score = 0.0f;  // softmax probability of the argmax class
  size_t index = 0;
};

// Ties resolve to the lowest index.
Classification classify(const audio::Fingerprint& fp,
                        const TinyConvModel& model);

}  // namespace omg::nn

#endif  // OMG_INFERENCE_HPP_
