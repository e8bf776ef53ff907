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
// Shared fixtures and independent reference implementations (oracles). The
// oracles deliberately avoid the production code paths they check: the DFT
// is a direct O(N^2) double-precision sum, the convolution a plain
// bounds-checked six-loop, and HKDF is rebuilt from the bare hash.

#ifndef OMG_TESTS_TESTUTIL_HPP_
#define OMG_TESTS_TESTUTIL_HPP_

#include <cmath>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "omg/audio.hpp"
#include "omg/bytes.hpp"
#include "omg/crypto.hpp"
#include "omg/enclave.hpp"
#include "omg/fft.hpp"
#include "omg/fingerprint.hpp"
#include "omg/model.hpp"
#include "omg/protocol.hpp"

namespace omg::test {

// ---------------------------------------------------------------------------
// Filesystem scratch space.

class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "omg-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Audio fixtures.

inline audio::AudioClip silence_clip() {
  return {std::vector<int16_t>(audio::kClipSamples, 0), audio::kStandardRate};
}

inline audio::AudioClip sine_clip(double freq_hz, double amplitude) {
  audio::AudioClip clip;
  clip.samples.resize(audio::kClipSamples);
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    double t = static_cast<double>(i) / audio::kStandardRate;
    double v = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * t);
    clip.samples[i] = static_cast<int16_t>(std::lround(
        std::clamp(v, -32768.0, 32767.0)));
  }
  return clip;
}

inline audio::AudioClip noise_clip(uint64_t seed, int16_t amplitude = 8000) {
  std::mt19937_64 gen(seed);
  audio::AudioClip clip;
  clip.samples.resize(audio::kClipSamples);
  for (auto& s : clip.samples) {
    s = static_cast<int16_t>(static_cast<int64_t>(gen() % (2 * amplitude)) -
                             amplitude);
  }
  return clip;
}

inline std::vector<int16_t> random_window(std::mt19937_64& gen,
                                          int16_t amplitude = 20000) {
  std::vector<int16_t> w(audio::kWindowSamples);
  for (auto& s : w) {
    s = static_cast<int16_t>(static_cast<int64_t>(gen() % (2 * amplitude)) -
                             amplitude);
  }
  return w;
}

// A deterministic mixed set of clips (tones, chirps, noise).
inline std::vector<audio::AudioClip> fixture_clips(size_t count,
                                                   uint64_t seed) {
  std::vector<audio::AudioClip> clips;
  std::mt19937_64 gen(seed);
  for (size_t i = 0; i < count; ++i) {
    switch (gen() % 3) {
      case 0:
        clips.push_back(sine_clip(100.0 + static_cast<double>(gen() % 3800),
                                  1000.0 + static_cast<double>(gen() % 15000)));
        break;
      case 1:
        clips.push_back(noise_clip(gen()));
        break;
      default:
        clips.push_back(sine_clip(200.0 + static_cast<double>(gen() % 1000),
                                  500.0 + static_cast<double>(gen() % 4000)));
        break;
    }
  }
  return clips;
}

// ---------------------------------------------------------------------------
// DSP oracles.

// |DFT(window zero-padded to 512)|_k / 512 for k = 0..255, in double.
inline std::vector<double> dft_oracle(std::span<const int16_t> window) {
  constexpr size_t kN = audio::kFftSize;
  std::vector<double> mags(audio::kSpectrumBins);
  for (size_t k = 0; k < mags.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (size_t n = 0; n < window.size(); ++n) {
      double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                     static_cast<double>(n) / static_cast<double>(kN);
      re += window[n] * std::cos(angle);
      im += window[n] * std::sin(angle);
    }
    mags[k] = std::sqrt(re * re + im * im) / static_cast<double>(kN);
  }
  return mags;
}

// Brute-force grouped mean matching the documented pooling layout.
inline std::vector<double> pool_oracle(std::span<const double> bins) {
  std::vector<double> pooled(audio::kPooledBins);
  for (size_t k = 0; k < pooled.size(); ++k) {
    size_t begin = k * audio::kPoolGroup;
    size_t end = std::min(begin + audio::kPoolGroup, bins.size());
    double sum = 0.0;
    for (size_t i = begin; i < end; ++i) sum += bins[i];
    pooled[k] = sum / static_cast<double>(end - begin);
  }
  return pooled;
}

// Float reference of the whole front end: normalized pooled magnitudes in
// [0, 1], row-major 49x43.
inline std::vector<double> float_fingerprint_oracle(
    const audio::AudioClip& clip) {
  std::vector<double> out;
  out.reserve(audio::kFrameCount * audio::kPooledBins);
  for (size_t f = 0; f < audio::kFrameCount; ++f) {
    std::span<const int16_t> window(
        clip.samples.data() + f * audio::kHopSamples, audio::kWindowSamples);
    std::vector<double> mags = dft_oracle(window);
    std::vector<double> pooled = pool_oracle(mags);
    for (double v : pooled) {
      out.push_back(v / static_cast<double>(audio::kFullScaleMagnitude));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference oracles.

// Independent six-loop convolution with virtual zero padding and double
// accumulation.
inline std::vector<double> conv2d_oracle(std::span<const float> input,
                                         const nn::ConvSpec& s,
                                         std::span<const float> weights,
                                         std::span<const float> bias) {
  const int out_h = static_cast<int>(s.out_h());
  const int out_w = static_cast<int>(s.out_w());
  int pad_top = 0, pad_left = 0;
  if (s.padding == nn::Padding::kSame) {
    int64_t th = static_cast<int64_t>(out_h - 1) * s.stride_h + s.kh - s.in_h;
    int64_t tw = static_cast<int64_t>(out_w - 1) * s.stride_w + s.kw - s.in_w;
    pad_top = static_cast<int>(std::max<int64_t>(th, 0) / 2);
    pad_left = static_cast<int>(std::max<int64_t>(tw, 0) / 2);
  }
  std::vector<double> out(static_cast<size_t>(out_h) * out_w * s.filters);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      for (uint32_t f = 0; f < s.filters; ++f) {
        double acc = bias[f];
        for (uint32_t ky = 0; ky < s.kh; ++ky) {
          for (uint32_t kx = 0; kx < s.kw; ++kx) {
            for (uint32_t c = 0; c < s.in_c; ++c) {
              int iy = oy * static_cast<int>(s.stride_h) - pad_top +
                       static_cast<int>(ky);
              int ix = ox * static_cast<int>(s.stride_w) - pad_left +
                       static_cast<int>(kx);
              if (iy < 0 || iy >= static_cast<int>(s.in_h) || ix < 0 ||
                  ix >= static_cast<int>(s.in_w)) {
                continue;
              }
              double x = input[(static_cast<size_t>(iy) * s.in_w + ix) *
                                   s.in_c +
                               c];
              double w = weights[((static_cast<size_t>(f) * s.kh + ky) * s.kw +
                                  kx) *
                                     s.in_c +
                                 c];
              acc += x * w;
            }
          }
        }
        out[(static_cast<size_t>(oy) * out_w + ox) * s.filters + f] = acc;
      }
    }
  }
  return out;
}

inline std::vector<double> fc_oracle(std::span<const float> x,
                                     std::span<const float> w,
                                     std::span<const float> b) {
  std::vector<double> logits(b.begin(), b.end());
  for (size_t o = 0; o < logits.size(); ++o) {
    for (size_t i = 0; i < x.size(); ++i) {
      logits[o] += static_cast<double>(x[i]) * w[i * logits.size() + o];
    }
  }
  return logits;
}

// ---------------------------------------------------------------------------
// Crypto reference: HMAC and HKDF rebuilt from the bare SHA-256 call
// (RFC 2104 / RFC 5869), independent of the production HKDF path.

inline Bytes hmac_sha256_ref(ByteSpan key, ByteSpan message) {
  constexpr size_t kBlock = 64;
  Bytes k(key.begin(), key.end());
  if (k.size() > kBlock) k = crypto::sha256(k);
  k.resize(kBlock, 0);
  Bytes inner(kBlock), outer(kBlock);
  for (size_t i = 0; i < kBlock; ++i) {
    inner[i] = k[i] ^ 0x36;
    outer[i] = k[i] ^ 0x5c;
  }
  inner.insert(inner.end(), message.begin(), message.end());
  Bytes inner_digest = crypto::sha256(inner);
  outer.insert(outer.end(), inner_digest.begin(), inner_digest.end());
  return crypto::sha256(outer);
}

inline Bytes hkdf_sha256_ref(ByteSpan ikm, ByteSpan salt, ByteSpan info,
                             size_t out_len) {
  Bytes salt_or_zeros(salt.begin(), salt.end());
  if (salt_or_zeros.empty()) salt_or_zeros.assign(32, 0);
  Bytes prk = hmac_sha256_ref(salt_or_zeros, ikm);
  Bytes okm;
  Bytes t;
  for (uint8_t counter = 1; okm.size() < out_len; ++counter) {
    Bytes block = t;
    block.insert(block.end(), info.begin(), info.end());
    block.push_back(counter);
    t = hmac_sha256_ref(prk, block);
    okm.insert(okm.end(), t.begin(), t.end());
  }
  okm.resize(out_len);
  return okm;
}

// ---------------------------------------------------------------------------
// Protocol rig: platform + vendor + enclave host wired through the local
// link, everything seeded.

inline constexpr std::string_view kMarker = "OMG_PLAINTEXT_MARKER_3f9a71c2";

// Plants the marker inside the weight tensor bytes. Weights are the
// vendor's IP and must never surface anywhere; the predicted label, by
// contrast, is the protocol's legitimate output. The overwritten floats are
// large but finite, which is irrelevant to the confidentiality scan.
inline void embed_marker(nn::TinyConvModel& m) {
  Bytes marker(kMarker.begin(), kMarker.end());
  while (marker.size() % 4 != 0) marker.push_back('_');
  if (m.conv_weights.size() * 4 < marker.size()) {
    throw std::logic_error("model too small to carry the marker");
  }
  std::memcpy(m.conv_weights.data(), marker.data(), marker.size());
}

inline nn::TinyConvModel marked_model(uint64_t seed) {
  nn::TinyConvModel model = nn::random_model(seed);
  embed_marker(model);
  return model;
}

// Single-filter variant of the workload geometry; parses, classifies and
// seals like the real thing at a fraction of the bytes, which keeps
// thousand-run fuzzing quick.
inline nn::TinyConvModel small_model(uint64_t seed) {
  nn::TinyConvModel m;
  m.conv.filters = 1;
  std::mt19937_64 gen(seed);
  auto next = [&gen]() {
    return (static_cast<float>(gen() % 20001) - 10000.0f) * 1e-5f;
  };
  m.conv_weights.resize(m.conv.weight_count());
  for (auto& w : m.conv_weights) w = next();
  m.conv_bias.resize(m.conv.filters);
  for (auto& b : m.conv_bias) b = next();
  m.fc_bias.resize(nn::kCanonicalLabels.size());
  for (auto& b : m.fc_bias) b = next();
  m.fc_weights.resize(m.fc_in() * m.fc_bias.size());
  for (auto& w : m.fc_weights) w = next();
  for (auto label : nn::kCanonicalLabels) m.labels.emplace_back(label);
  m.validate();
  return m;
}

inline nn::TinyConvModel small_marked_model(uint64_t seed) {
  nn::TinyConvModel m = small_model(seed);
  embed_marker(m);
  return m;
}

struct Rig {
  SeededRng rng;
  crypto::PlatformIdentity platform;
  Bytes code;
  nn::TinyConvModel model;
  Bytes model_bytes;
  TempDir storage;
  enclave::CorePool pool;
  proto::Vendor vendor;
  proto::LocalVendorLink link;
  std::unique_ptr<proto::EnclaveHost> host;

  struct Options {
    uint64_t seed = 0x5eed;
    bool with_marker = false;
    bool use_small_model = false;
    bool tamper_code_before_boot = false;
    bool authorized = true;
  };

  static nn::TinyConvModel pick_model(const Options& o) {
    if (o.use_small_model) {
      return o.with_marker ? small_marked_model(7) : small_model(7);
    }
    return o.with_marker ? marked_model(7) : nn::random_model(7);
  }

  Rig() : Rig(Options{}) {}

  explicit Rig(const Options& options)
      : rng(options.seed),
        platform(crypto::generate_platform_identity(rng)),
        code(to_bytes("omg keyword recognition enclave image v1")),
        model(pick_model(options)),
        model_bytes(nn::save_model(model)),
        vendor(platform.platform_cert, crypto::measure(code), model_bytes,
               rng),
        link(vendor) {
    vendor.set_default_authorized(options.authorized);
    host = std::make_unique<proto::EnclaveHost>(code, storage.path(), pool,
                                                platform, link, 0, rng);
    if (options.tamper_code_before_boot) {
      host->instance().tamper_private_region_for_test(0, 0x01);
    }
  }

  void prepare_and_init(proto::UserClient* user = nullptr) {
    host->run_preparation(user);
    host->run_initialization();
  }
};

// ---------------------------------------------------------------------------
// Adversarial protocol fuzzing with a plaintext-marker scan after every
// operation. Surfaces checked: untrusted storage, every wire message (both
// transcripts), and every OS-readable memory region.

class MarkerScanner {
 public:
  explicit MarkerScanner(Rig& rig) : rig_(rig) {}

  // Non-empty result names the first leaking surface.
  std::string scan() {
    ByteSpan marker(reinterpret_cast<const uint8_t*>(kMarker.data()),
                    kMarker.size());
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(rig_.storage.path())) {
      if (!entry.is_regular_file()) continue;
      std::ifstream in(entry.path(), std::ios::binary | std::ios::ate);
      Bytes data(static_cast<size_t>(in.tellg()));
      in.seekg(0);
      in.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
      if (contains(data, marker)) {
        return "storage:" + entry.path().filename().string();
      }
    }
    const auto& host_entries = rig_.host->transcript().entries();
    for (; host_seen_ < host_entries.size(); ++host_seen_) {
      if (contains(host_entries[host_seen_].raw, marker)) {
        return "wire:host:" +
               std::string(proto::msg_kind_name(
                   host_entries[host_seen_].msg.kind()));
      }
    }
    const auto& vendor_entries = rig_.vendor.transcript().entries();
    for (; vendor_seen_ < vendor_entries.size(); ++vendor_seen_) {
      if (contains(vendor_entries[vendor_seen_].raw, marker)) {
        return "wire:vendor:" +
               std::string(proto::msg_kind_name(
                   vendor_entries[vendor_seen_].msg.kind()));
      }
    }
    auto& instance = rig_.host->instance();
    if (auto bytes = enclave::os_read_memory(instance.private_region())) {
      if (contains(*bytes, marker)) return "memory:private";
    }
    if (auto bytes = enclave::os_read_memory(instance.shared_region())) {
      if (contains(*bytes, marker)) return "memory:shared";
    }
    return "";
  }

 private:
  Rig& rig_;
  size_t host_seen_ = 0;
  size_t vendor_seen_ = 0;
};

struct FuzzResult {
  bool leaked = false;
  std::string surface;
  int ops_executed = 0;
  bool reached_operation = false;
};

// One randomized adversarial run: honest protocol steps interleaved with
// storage tampering, rollback attempts, revocation, direct memory pokes and
// message-order abuse. Every step is followed by a marker scan.
inline FuzzResult fuzz_protocol_run(uint64_t seed) {
  Rig::Options options;
  options.seed = seed;
  options.with_marker = true;
  options.use_small_model = true;
  Rig rig(options);
  MarkerScanner scanner(rig);
  std::mt19937_64 gen(seed ^ 0xfedcba9876543210ull);
  audio::AudioClip clip = noise_clip(seed);
  Bytes stale_container;

  FuzzResult result;
  auto container_path = rig.host->app().container_path();
  const int steps = 8 + static_cast<int>(gen() % 10);
  for (int step = 0; step < steps; ++step) {
    int op = static_cast<int>(gen() % 12);
    try {
      switch (op) {
        case 0:
        case 1:
          rig.host->run_preparation();
          break;
        case 2:
        case 3:
          rig.host->run_initialization();
          break;
        case 4:
        case 5:
          rig.host->query_clip(clip);
          break;
        case 6:
          rig.vendor.revoke(rig.host->enclave_pk());
          break;
        case 7:
          rig.vendor.rotate_model(nn::save_model(small_marked_model(seed)));
          break;
        case 8: {  // storage tamper
          if (std::filesystem::exists(container_path)) {
            if (stale_container.empty()) {
              std::ifstream in(container_path,
                               std::ios::binary | std::ios::ate);
              stale_container.resize(static_cast<size_t>(in.tellg()));
              in.seekg(0);
              in.read(reinterpret_cast<char*>(stale_container.data()),
                      static_cast<std::streamsize>(stale_container.size()));
            }
            std::fstream f(container_path,
                           std::ios::binary | std::ios::in | std::ios::out);
            f.seekp(static_cast<std::streamoff>(gen() % 64));
            char b = static_cast<char>(gen());
            f.write(&b, 1);
          }
          break;
        }
        case 9: {  // rollback: restore a stale container
          if (!stale_container.empty()) {
            std::ofstream out(container_path,
                              std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(stale_container.data()),
                      static_cast<std::streamsize>(stale_container.size()));
          }
          break;
        }
        case 10: {
          auto& instance = rig.host->instance();
          enclave::os_read_memory(instance.private_region());
          enclave::os_write_memory(instance.private_region(),
                                   to_bytes("intrusion"));
          break;
        }
        case 11: {  // replay the last vendor message out of order
          proto::KeyRequestMsg replay{rig.host->enclave_pk()};
          rig.vendor.handle(
              proto::make_message(rig.host->session(), replay));
          break;
        }
      }
    } catch (const Error&) {
      // Typed protocol failures are expected under adversarial schedules.
    }
    ++result.ops_executed;
    std::string surface = scanner.scan();
    if (!surface.empty()) {
      result.leaked = true;
      result.surface = surface;
      return result;
    }
  }
  result.reached_operation =
      rig.host->app().phase() == proto::EnclaveApp::Phase::kOperation;
  return result;
}

}  // namespace omg::test

#endif  // OMG_TESTS_TESTUTIL_HPP_
