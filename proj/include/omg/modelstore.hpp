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
// Untrusted persistence of sealed model containers. Nothing here needs a
// key: reads validate structure only, authenticity is the crypto layer's
// job. An attacker with storage access can rewrite bytes at will; the spec
// of this module is merely to round-trip them faithfully.

#ifndef OMG_MODELSTORE_HPP_
#define OMG_MODELSTORE_HPP_

#include <filesystem>

#include "omg/container.hpp"

namespace omg::store {

// Whole-file atomic (write to temp, rename). Throws IoError.
void write_container(const std::filesystem::path& path,
                     const SealedModelContainer& c);

// Throws MalformedDataError (bad magic, truncation) or IoError.
SealedModelContainer read_container(const std::filesystem::path& path);

enum class Freshness { kOk, kRollbackDetected };

// Advisory fast-path; the AEAD key mismatch is the enforcing mechanism.
Freshness check_freshness(const SealedModelContainer& c,
                          const Nonce& expected_nonce,
                          uint32_t expected_version);

}  // namespace omg::store

#endif  // OMG_MODELSTORE_HPP_
