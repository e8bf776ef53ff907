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
// Canonical TLV encoding used by certificates, attestation reports and wire
// messages: one byte tag, 4-byte little-endian length, value. Fields are
// written in ascending tag order; see docs/wire_format.md for the tag tables.

#ifndef OMG_TLV_HPP_
#define OMG_TLV_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "omg/bytes.hpp"
#include "omg/errors.hpp"

namespace omg {

inline void put_u16le(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32le(Bytes& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_u64le(Bytes& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint16_t get_u16le(ByteSpan in, size_t offset);
uint32_t get_u32le(ByteSpan in, size_t offset);
uint64_t get_u64le(ByteSpan in, size_t offset);

class TlvWriter {
 public:
  void add(uint8_t tag, ByteSpan value);
  void add_u8(uint8_t tag, uint8_t v);
  void add_u32(uint8_t tag, uint32_t v);
  void add_u64(uint8_t tag, uint64_t v);
  void add_string(uint8_t tag, std::string_view v);

  const Bytes& bytes() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Single forward pass over a TLV sequence. Required fields must appear in
// the canonical (ascending-tag) order; optional fields may be absent.
class TlvReader {
 public:
  explicit TlvReader(ByteSpan data) : data_(data) {}

  bool done() const { return pos_ >= data_.size(); }
  // Tag of the next field, without consuming it. Throws MalformedDataError
  // on truncation.
  uint8_t peek_tag() const;

  Bytes expect(uint8_t tag);                    // any length
  Bytes expect_len(uint8_t tag, size_t len);    // exact length
  uint8_t expect_u8(uint8_t tag);
  uint32_t expect_u32(uint8_t tag);
  uint64_t expect_u64(uint8_t tag);
  std::string expect_string(uint8_t tag);

  // Consumes the field if present, otherwise leaves the cursor alone.
  bool maybe(uint8_t tag, Bytes* out);
  bool maybe_u32(uint8_t tag, uint32_t* out);

  // All remaining bytes must have been consumed.
  void finish() const;

 private:
  Bytes next(uint8_t tag);

  ByteSpan data_;
  size_t pos_ = 0;
};

}  // namespace omg

#endif  // OMG_TLV_HPP_
