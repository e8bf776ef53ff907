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

#include "omg/audio.hpp"

#include <cstring>
#include <fstream>

#include "omg/errors.hpp"
#include "omg/tlv.hpp"

namespace omg::audio {

namespace {

constexpr uint16_t kFormatPcm = 1;

struct ChunkHeader {
  char id[4];
  uint32_t size;
};

ChunkHeader read_chunk_header(ByteSpan data, size_t offset) {
  if (offset + 8 > data.size()) {
    throw MalformedDataError("wav: truncated chunk header");
  }
  ChunkHeader h;
  std::memcpy(h.id, data.data() + offset, 4);
  h.size = get_u32le(data, offset + 4);
  return h;
}

bool id_is(const ChunkHeader& h, const char* id) {
  return std::memcmp(h.id, id, 4) == 0;
}

}  // namespace

AudioClip read_wav(ByteSpan bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw MalformedDataError("wav: not a RIFF/WAVE file");
  }
  uint32_t riff_size = get_u32le(bytes, 4);
  if (size_t{riff_size} + 8 > bytes.size()) {
    throw MalformedDataError("wav: declared RIFF size past end of file");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  AudioClip clip;
  bool have_data = false;

  size_t offset = 12;
  while (offset + 8 <= bytes.size()) {
    ChunkHeader h = read_chunk_header(bytes, offset);
    size_t body = offset + 8;
    if (body + h.size > bytes.size()) {
      throw MalformedDataError("wav: chunk size past end of file");
    }
    if (id_is(h, "fmt ")) {
      if (h.size < 16) throw MalformedDataError("wav: fmt chunk too small");
      format = get_u16le(bytes, body);
      channels = get_u16le(bytes, body + 2);
      sample_rate = get_u32le(bytes, body + 4);
      bits = get_u16le(bytes, body + 14);
      have_fmt = true;
    } else if (id_is(h, "data")) {
      if (!have_fmt) throw MalformedDataError("wav: data before fmt");
      if (format != kFormatPcm) {
        throw UnsupportedFormatError("wav: only PCM (format 1) is supported");
      }
      if (channels != 1) {
        throw UnsupportedFormatError("wav: only mono is supported");
      }
      if (bits != 16) {
        throw UnsupportedFormatError("wav: only 16-bit samples are supported");
      }
      if (h.size % 2 != 0) throw MalformedDataError("wav: odd data size");
      clip.sample_rate = sample_rate;
      clip.samples.resize(h.size / 2);
      for (size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] =
            static_cast<int16_t>(get_u16le(bytes, body + 2 * i));
      }
      have_data = true;
    }
    // Skip unknown chunks (LIST, fact, ...). Chunk bodies are word-aligned.
    offset = body + h.size + (h.size % 2);
  }
  if (!have_data) throw MalformedDataError("wav: missing data chunk");
  return clip;
}

AudioClip read_wav_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (!in) throw IoError("short read from " + path.string());
  return read_wav(data);
}

Bytes write_wav(const AudioClip& clip) {
  const uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * 2);
  Bytes out;
  out.reserve(44 + data_size);
  auto put_tag = [&out](const char* tag) {
    out.insert(out.end(), tag, tag + 4);
  };
  put_tag("RIFF");
  put_u32le(out, 36 + data_size);
  put_tag("WAVE");
  put_tag("fmt ");
  put_u32le(out, 16);
  put_u16le(out, kFormatPcm);
  put_u16le(out, 1);  // mono
  put_u32le(out, clip.sample_rate);
  put_u32le(out, clip.sample_rate * 2);  // byte rate
  put_u16le(out, 2);                     // block align
  put_u16le(out, 16);                    // bits
  put_tag("data");
  put_u32le(out, data_size);
  for (int16_t s : clip.samples) {
    put_u16le(out, static_cast<uint16_t>(s));
  }
  return out;
}

void write_wav_file(const std::filesystem::path& path, const AudioClip& clip) {
  Bytes data = write_wav(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::array<std::span<const int16_t>, kFrameCount> frame(const AudioClip& clip) {
  if (clip.sample_rate != kStandardRate) {
    throw MalformedDataError("frame: clip must be sampled at 16 kHz");
  }
  if (clip.samples.size() != kClipSamples) {
    throw MalformedDataError("frame: clip must hold exactly 16000 samples");
  }
  std::array<std::span<const int16_t>, kFrameCount> windows;
  for (size_t i = 0; i < kFrameCount; ++i) {
    windows[i] = std::span<const int16_t>(
        clip.samples.data() + i * kHopSamples, kWindowSamples);
  }
  return windows;
}

}  // namespace omg::audio
