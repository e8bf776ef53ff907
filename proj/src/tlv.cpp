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

#include "omg/tlv.hpp"

namespace omg {

namespace {
void check_range(ByteSpan in, size_t offset, size_t n) {
  if (offset + n > in.size()) {
    throw MalformedDataError("truncated input");
  }
}
}  // namespace

uint16_t get_u16le(ByteSpan in, size_t offset) {
  check_range(in, offset, 2);
  return static_cast<uint16_t>(in[offset] | (in[offset + 1] << 8));
}

uint32_t get_u32le(ByteSpan in, size_t offset) {
  check_range(in, offset, 4);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[offset + i];
  return v;
}

uint64_t get_u64le(ByteSpan in, size_t offset) {
  check_range(in, offset, 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[offset + i];
  return v;
}

void TlvWriter::add(uint8_t tag, ByteSpan value) {
  out_.push_back(tag);
  put_u32le(out_, static_cast<uint32_t>(value.size()));
  out_.insert(out_.end(), value.begin(), value.end());
}

void TlvWriter::add_u8(uint8_t tag, uint8_t v) {
  add(tag, ByteSpan(&v, 1));
}

void TlvWriter::add_u32(uint8_t tag, uint32_t v) {
  Bytes tmp;
  put_u32le(tmp, v);
  add(tag, tmp);
}

void TlvWriter::add_u64(uint8_t tag, uint64_t v) {
  Bytes tmp;
  put_u64le(tmp, v);
  add(tag, tmp);
}

void TlvWriter::add_string(uint8_t tag, std::string_view v) {
  add(tag, ByteSpan(reinterpret_cast<const uint8_t*>(v.data()), v.size()));
}

uint8_t TlvReader::peek_tag() const {
  if (pos_ >= data_.size()) throw MalformedDataError("tlv: truncated tag");
  return data_[pos_];
}

Bytes TlvReader::next(uint8_t tag) {
  uint8_t actual = peek_tag();
  if (actual != tag) {
    throw MalformedDataError("tlv: expected tag " + std::to_string(tag) +
                             ", found " + std::to_string(actual));
  }
  uint32_t len = get_u32le(data_, pos_ + 1);
  check_range(data_, pos_ + 5, len);
  Bytes value(data_.begin() + pos_ + 5, data_.begin() + pos_ + 5 + len);
  pos_ += 5 + len;
  return value;
}

Bytes TlvReader::expect(uint8_t tag) { return next(tag); }

Bytes TlvReader::expect_len(uint8_t tag, size_t len) {
  Bytes v = next(tag);
  if (v.size() != len) {
    throw MalformedDataError("tlv: tag " + std::to_string(tag) +
                             " has length " + std::to_string(v.size()) +
                             ", want " + std::to_string(len));
  }
  return v;
}

uint8_t TlvReader::expect_u8(uint8_t tag) { return expect_len(tag, 1)[0]; }

uint32_t TlvReader::expect_u32(uint8_t tag) {
  return get_u32le(expect_len(tag, 4), 0);
}

uint64_t TlvReader::expect_u64(uint8_t tag) {
  return get_u64le(expect_len(tag, 8), 0);
}

std::string TlvReader::expect_string(uint8_t tag) {
  Bytes v = next(tag);
  return std::string(v.begin(), v.end());
}

bool TlvReader::maybe(uint8_t tag, Bytes* out) {
  if (done() || peek_tag() != tag) return false;
  *out = next(tag);
  return true;
}

bool TlvReader::maybe_u32(uint8_t tag, uint32_t* out) {
  if (done() || peek_tag() != tag) return false;
  *out = get_u32le(expect_len(tag, 4), 0);
  return true;
}

void TlvReader::finish() const {
  if (!done()) throw MalformedDataError("tlv: trailing bytes");
}

}  // namespace omg
