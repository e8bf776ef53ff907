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

#include "omg/inference.hpp"

#include <algorithm>
#include <cmath>

#include "omg/errors.hpp"

namespace omg::nn {

namespace {

// SAME padding, TF convention: total = max((out-1)*stride + k - in, 0),
// split with the smaller half before.
int pad_before(uint32_t in, uint32_t out, uint32_t stride, uint32_t k) {
  int64_t total = static_cast<int64_t>(out - 1) * stride + k - in;
  if (total < 0) total = 0;
  return static_cast<int>(total / 2);
}

}  // namespace

std::vector<float> conv2d(std::span<const float> input, const ConvSpec& spec,
                          std::span<const float> weights,
                          std::span<const float> bias) {
  if (input.size() != size_t{spec.in_h} * spec.in_w * spec.in_c) {
    throw MalformedDataError("conv2d: input size mismatch");
  }
  if (weights.size() != spec.weight_count() || bias.size() != spec.filters) {
    throw MalformedDataError("conv2d: weight size mismatch");
  }
  const uint32_t out_h = spec.out_h();
  const uint32_t out_w = spec.out_w();
  const int pad_top =
      spec.padding == Padding::kSame
          ? pad_before(spec.in_h, out_h, spec.stride_h, spec.kh)
          : 0;
  const int pad_left =
      spec.padding == Padding::kSame
          ? pad_before(spec.in_w, out_w, spec.stride_w, spec.kw)
          : 0;

  std::vector<float> out(size_t{out_h} * out_w * spec.filters);
  for (uint32_t oy = 0; oy < out_h; ++oy) {
    const int64_t base_y = static_cast<int64_t>(oy) * spec.stride_h - pad_top;
    for (uint32_t ox = 0; ox < out_w; ++ox) {
      const int64_t base_x =
          static_cast<int64_t>(ox) * spec.stride_w - pad_left;
      for (uint32_t f = 0; f < spec.filters; ++f) {
        double acc = bias[f];
        for (uint32_t ky = 0; ky < spec.kh; ++ky) {
          const int64_t iy = base_y + ky;
          if (iy < 0 || iy >= spec.in_h) continue;
          for (uint32_t kx = 0; kx < spec.kw; ++kx) {
            const int64_t ix = base_x + kx;
            if (ix < 0 || ix >= spec.in_w) continue;
            const size_t in_base = (size_t{static_cast<size_t>(iy)} *
                                        spec.in_w +
                                    static_cast<size_t>(ix)) *
                                   spec.in_c;
            const size_t w_base =
                ((size_t{f} * spec.kh + ky) * spec.kw + kx) * spec.in_c;
            for (uint32_t c = 0; c < spec.in_c; ++c) {
              acc += static_cast<double>(input[in_base + c]) *
                     weights[w_base + c];
            }
          }
        }
        out[(size_t{oy} * out_w + ox) * spec.filters + f] =
            static_cast<float>(acc);
      }
    }
  }
  return out;
}

std::vector<float> conv2d(const audio::Fingerprint& fp,
                          const TinyConvModel& model) {
  if (model.conv.in_h != audio::Fingerprint::rows() ||
      model.conv.in_w != audio::Fingerprint::cols() || model.conv.in_c != 1) {
    throw MalformedDataError("conv2d: model does not accept 49x43x1 input");
  }
  std::vector<float> input(fp.values.size());
  for (size_t i = 0; i < input.size(); ++i) {
    input[i] = audio::dequantize(fp.values[i]);
  }
  return conv2d(input, model.conv, model.conv_weights, model.conv_bias);
}

void relu(std::span<float> x) {
  for (float& v : x) v = std::max(v, 0.0f);
}

std::vector<float> fully_connected(std::span<const float> x,
                                   const TinyConvModel& model) {
  if (x.size() != model.fc_in()) {
    throw MalformedDataError("fully_connected: input dimension mismatch");
  }
  const size_t classes = model.num_classes();
  std::vector<double> acc(model.fc_bias.begin(), model.fc_bias.end());
  for (size_t i = 0; i < x.size(); ++i) {
    const float xi = x[i];
    if (xi == 0.0f) continue;
    const float* row = &model.fc_weights[i * classes];
    for (size_t o = 0; o < classes; ++o) {
      acc[o] += static_cast<double>(xi) * row[o];
    }
  }
  return std::vector<float>(acc.begin(), acc.end());
}

std::vector<double> softmax(std::span<const float> logits) {
  const float max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  std::vector<double> probs(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(static_cast<double>(logits[i]) - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

Classification classify(const audio::Fingerprint& fp,
                        const TinyConvModel& model) {
  std::vector<float> features = conv2d(fp, model);
  relu(features);
  std::vector<float> logits = fully_connected(features, model);
  std::vector<double> probs = softmax(logits);

  size_t best = 0;
  for (size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;  // ties keep the lowest index
  }
  return Classification{model.labels[best], static_cast<float>(probs[best]),
                        best};
}

}  // namespace omg::nn
