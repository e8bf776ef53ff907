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

#include "omg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "omg/errors.hpp"
#include "omg/tlv.hpp"

namespace omg::nn {

namespace {

constexpr char kModelMagic[4] = {'T', 'C', 'V', '1'};
constexpr uint8_t kFormatVersion = 1;
constexpr uint8_t kWeightsF32 = 0;
constexpr uint8_t kWeightsQ8 = 1;

uint32_t ceil_div(uint32_t a, uint32_t b) { return (a + b - 1) / b; }

void put_f32(Bytes& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32le(out, bits);
}

float get_f32(ByteSpan in, size_t offset) {
  uint32_t bits = get_u32le(in, offset);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_tensor_f32(Bytes& out, const std::vector<float>& t) {
  for (float v : t) put_f32(out, v);
}

// Affine uint8: q = round((v - min) / scale), v' = min + scale * q.
void put_tensor_q8(Bytes& out, const std::vector<float>& t) {
  float lo = 0.0f, hi = 0.0f;
  if (!t.empty()) {
    auto [mn, mx] = std::minmax_element(t.begin(), t.end());
    lo = *mn;
    hi = *mx;
  }
  float scale = (hi - lo) / 255.0f;
  if (scale <= 0.0f) scale = 1.0f;
  put_f32(out, lo);
  put_f32(out, scale);
  for (float v : t) {
    long q = std::lround((v - lo) / scale);
    out.push_back(static_cast<uint8_t>(std::clamp(q, 0L, 255L)));
  }
}

std::vector<float> get_tensor(ByteSpan in, size_t& offset, size_t count,
                              uint8_t encoding) {
  std::vector<float> t(count);
  if (encoding == kWeightsF32) {
    if (offset + 4 * count > in.size()) {
      throw MalformedDataError("model: tensor data truncated");
    }
    for (size_t i = 0; i < count; ++i) t[i] = get_f32(in, offset + 4 * i);
    offset += 4 * count;
  } else {
    if (offset + 8 + count > in.size()) {
      throw MalformedDataError("model: tensor data truncated");
    }
    float lo = get_f32(in, offset);
    float scale = get_f32(in, offset + 4);
    offset += 8;
    for (size_t i = 0; i < count; ++i) {
      t[i] = lo + scale * static_cast<float>(in[offset + i]);
    }
    offset += count;
  }
  return t;
}

}  // namespace

uint32_t ConvSpec::out_h() const {
  return padding == Padding::kSame ? ceil_div(in_h, stride_h)
                                   : (in_h - kh) / stride_h + 1;
}

uint32_t ConvSpec::out_w() const {
  return padding == Padding::kSame ? ceil_div(in_w, stride_w)
                                   : (in_w - kw) / stride_w + 1;
}

void TinyConvModel::validate() const {
  if (conv.in_h == 0 || conv.in_w == 0 || conv.in_c == 0 ||
      conv.filters == 0 || conv.kh == 0 || conv.kw == 0 ||
      conv.stride_h == 0 || conv.stride_w == 0) {
    throw MalformedDataError("model: zero dimension");
  }
  if (conv.padding == Padding::kValid &&
      (conv.kh > conv.in_h || conv.kw > conv.in_w)) {
    throw MalformedDataError("model: kernel larger than input");
  }
  if (conv_weights.size() != conv.weight_count()) {
    throw MalformedDataError("model: conv weight count mismatch");
  }
  if (conv_bias.size() != conv.filters) {
    throw MalformedDataError("model: conv bias count mismatch");
  }
  if (fc_bias.empty() || labels.size() != fc_bias.size()) {
    throw MalformedDataError("model: label table does not match output size");
  }
  if (fc_weights.size() != fc_in() * num_classes()) {
    throw MalformedDataError("model: fc weight count mismatch");
  }
}

Bytes save_model(const TinyConvModel& model, bool quantize8) {
  model.validate();
  Bytes out(kModelMagic, kModelMagic + sizeof(kModelMagic));
  out.push_back(kFormatVersion);
  out.push_back(quantize8 ? kWeightsQ8 : kWeightsF32);
  out.push_back(static_cast<uint8_t>(model.conv.padding));
  out.push_back(0);  // reserved
  put_u32le(out, model.conv.in_h);
  put_u32le(out, model.conv.in_w);
  put_u32le(out, model.conv.in_c);
  put_u32le(out, model.conv.filters);
  put_u32le(out, model.conv.kh);
  put_u32le(out, model.conv.kw);
  put_u32le(out, model.conv.stride_h);
  put_u32le(out, model.conv.stride_w);
  put_u32le(out, static_cast<uint32_t>(model.fc_in()));
  put_u32le(out, static_cast<uint32_t>(model.num_classes()));
  put_u32le(out, static_cast<uint32_t>(model.labels.size()));

  if (quantize8) {
    put_tensor_q8(out, model.conv_weights);
    put_tensor_f32(out, model.conv_bias);
    put_tensor_q8(out, model.fc_weights);
    put_tensor_f32(out, model.fc_bias);
  } else {
    put_tensor_f32(out, model.conv_weights);
    put_tensor_f32(out, model.conv_bias);
    put_tensor_f32(out, model.fc_weights);
    put_tensor_f32(out, model.fc_bias);
  }

  for (const std::string& label : model.labels) {
    if (label.size() > std::numeric_limits<uint16_t>::max()) {
      throw MalformedDataError("model: label too long");
    }
    put_u16le(out, static_cast<uint16_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  return out;
}

TinyConvModel load_model(ByteSpan bytes) {
  if (bytes.size() < 52 ||
      std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw MalformedDataError("model: bad magic");
  }
  if (bytes[4] != kFormatVersion) {
    throw MalformedDataError("model: unsupported format version");
  }
  const uint8_t encoding = bytes[5];
  if (encoding != kWeightsF32 && encoding != kWeightsQ8) {
    throw MalformedDataError("model: unknown weight encoding");
  }
  if (bytes[6] > 1) throw MalformedDataError("model: unknown padding mode");

  TinyConvModel m;
  m.conv.padding = static_cast<Padding>(bytes[6]);
  m.conv.in_h = get_u32le(bytes, 8);
  m.conv.in_w = get_u32le(bytes, 12);
  m.conv.in_c = get_u32le(bytes, 16);
  m.conv.filters = get_u32le(bytes, 20);
  m.conv.kh = get_u32le(bytes, 24);
  m.conv.kw = get_u32le(bytes, 28);
  m.conv.stride_h = get_u32le(bytes, 32);
  m.conv.stride_w = get_u32le(bytes, 36);
  const uint32_t fc_in = get_u32le(bytes, 40);
  const uint32_t fc_out = get_u32le(bytes, 44);
  const uint32_t label_count = get_u32le(bytes, 48);

  if (m.conv.in_h == 0 || m.conv.in_w == 0 || m.conv.in_c == 0 ||
      m.conv.filters == 0 || m.conv.kh == 0 || m.conv.kw == 0 ||
      m.conv.stride_h == 0 || m.conv.stride_w == 0 || fc_out == 0) {
    throw MalformedDataError("model: zero dimension in header");
  }
  if (fc_in != uint64_t{m.conv.out_h()} * m.conv.out_w() * m.conv.filters) {
    throw MalformedDataError("model: fc input dim inconsistent with conv");
  }
  if (label_count != fc_out) {
    throw MalformedDataError("model: label count does not match output size");
  }

  size_t offset = 52;
  m.conv_weights = get_tensor(bytes, offset, m.conv.weight_count(), encoding);
  m.conv_bias = get_tensor(bytes, offset, m.conv.filters, kWeightsF32);
  m.fc_weights =
      get_tensor(bytes, offset, size_t{fc_in} * fc_out, encoding);
  m.fc_bias = get_tensor(bytes, offset, fc_out, kWeightsF32);

  for (uint32_t i = 0; i < label_count; ++i) {
    uint16_t len = get_u16le(bytes, offset);
    offset += 2;
    if (offset + len > bytes.size()) {
      throw MalformedDataError("model: label table truncated");
    }
    m.labels.emplace_back(bytes.begin() + offset, bytes.begin() + offset + len);
    offset += len;
  }
  if (offset != bytes.size()) {
    throw MalformedDataError("model: trailing bytes");
  }
  m.validate();
  return m;
}

void save_model_file(const std::filesystem::path& path,
                     const TinyConvModel& model, bool quantize8) {
  Bytes data = save_model(model, quantize8);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("short write to " + path.string());
}

TinyConvModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (!in) throw IoError("short read from " + path.string());
  return load_model(data);
}

TinyConvModel random_model(uint64_t seed) {
  TinyConvModel m;
  std::mt19937_64 gen(seed);
  // Uniform in [-0.1, 0.1], generated from raw draws so the stream is
  // identical across standard libraries.
  auto next = [&gen]() {
    return (static_cast<float>(gen() % 200001) - 100000.0f) * 1e-6f;
  };
  m.conv_weights.resize(m.conv.weight_count());
  for (auto& w : m.conv_weights) w = next();
  m.conv_bias.resize(m.conv.filters);
  for (auto& b : m.conv_bias) b = next();
  m.fc_bias.resize(kCanonicalLabels.size());
  for (auto& b : m.fc_bias) b = next();
  m.fc_weights.resize(m.fc_in() * m.fc_bias.size());
  for (auto& w : m.fc_weights) w = next();
  for (auto label : kCanonicalLabels) m.labels.emplace_back(label);
  m.validate();
  return m;
}

}  // namespace omg::nn
