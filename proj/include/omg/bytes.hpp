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

#ifndef OMG_BYTES_HPP_
#define OMG_BYTES_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace omg {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteSpan b) {
  return std::string(b.begin(), b.end());
}

std::string hex_encode(ByteSpan data);
Bytes hex_decode(std::string_view hex);

// Overwrites the buffer with zeros in a way the optimizer must not elide.
void secure_wipe(void* data, size_t len);
inline void secure_wipe(Bytes& b) { secure_wipe(b.data(), b.size()); }

// Byte container whose contents are wiped on destruction. Used for secret
// key material.
class SecretBytes {
 public:
  SecretBytes() = default;
  explicit SecretBytes(Bytes b) : data_(std::move(b)) {}
  SecretBytes(const SecretBytes&) = default;
  SecretBytes& operator=(const SecretBytes&) = default;
  SecretBytes(SecretBytes&&) noexcept = default;
  SecretBytes& operator=(SecretBytes&&) noexcept = default;
  ~SecretBytes() { secure_wipe(data_); }

  ByteSpan view() const { return data_; }
  Bytes& raw() { return data_; }
  const Bytes& raw() const { return data_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

 private:
  Bytes data_;
};

// True if `needle` occurs as a contiguous subsequence of `haystack`.
bool contains(ByteSpan haystack, ByteSpan needle);

}  // namespace omg

#endif  // OMG_BYTES_HPP_
