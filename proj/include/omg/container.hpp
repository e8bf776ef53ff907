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

#ifndef OMG_CONTAINER_HPP_
#define OMG_CONTAINER_HPP_

#include <array>
#include <cstdint>

#include "omg/bytes.hpp"

namespace omg {

using Nonce = std::array<uint8_t, 16>;
inline constexpr size_t kAeadIvLen = 12;
inline constexpr size_t kAeadTagLen = 16;

// On-disk layout (little-endian, byte-exact; see docs/wire_format.md):
//   magic "OMG1" | u32 model_version | nonce[16] | iv[12] | u32 ct_len |
//   ciphertext | tag[16]
// The first 24 bytes (magic, version, nonce) are the AEAD associated data,
// so version and nonce are covered by the tag without needing the plaintext.
struct SealedModelContainer {
  uint32_t model_version = 0;
  Nonce nonce{};
  std::array<uint8_t, kAeadIvLen> iv{};
  Bytes ciphertext;
  std::array<uint8_t, kAeadTagLen> tag{};

  // The authenticated header: magic | version | nonce.
  Bytes associated_data() const;

  Bytes serialize() const;
  static SealedModelContainer parse(ByteSpan data);  // throws MalformedDataError

  bool operator==(const SealedModelContainer&) const = default;
};

inline constexpr char kContainerMagic[4] = {'O', 'M', 'G', '1'};

}  // namespace omg

#endif  // OMG_CONTAINER_HPP_
