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

#include "omg/container.hpp"

#include <cstring>

#include "omg/errors.hpp"
#include "omg/tlv.hpp"

namespace omg {

Bytes SealedModelContainer::associated_data() const {
  Bytes aad(kContainerMagic, kContainerMagic + sizeof(kContainerMagic));
  put_u32le(aad, model_version);
  aad.insert(aad.end(), nonce.begin(), nonce.end());
  return aad;
}

Bytes SealedModelContainer::serialize() const {
  Bytes out = associated_data();
  out.insert(out.end(), iv.begin(), iv.end());
  put_u32le(out, static_cast<uint32_t>(ciphertext.size()));
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

SealedModelContainer SealedModelContainer::parse(ByteSpan data) {
  constexpr size_t kHeaderLen = 4 + 4 + 16 + 12 + 4;
  if (data.size() < kHeaderLen) {
    throw MalformedDataError("container: truncated header");
  }
  if (std::memcmp(data.data(), kContainerMagic, sizeof(kContainerMagic)) != 0) {
    throw MalformedDataError("container: bad magic");
  }
  SealedModelContainer c;
  c.model_version = get_u32le(data, 4);
  std::memcpy(c.nonce.data(), data.data() + 8, c.nonce.size());
  std::memcpy(c.iv.data(), data.data() + 24, c.iv.size());
  uint32_t ct_len = get_u32le(data, 36);
  if (data.size() != kHeaderLen + size_t{ct_len} + kAeadTagLen) {
    throw MalformedDataError("container: length mismatch");
  }
  c.ciphertext.assign(data.begin() + kHeaderLen,
                      data.begin() + kHeaderLen + ct_len);
  std::memcpy(c.tag.data(), data.data() + kHeaderLen + ct_len, c.tag.size());
  return c;
}

}  // namespace omg
