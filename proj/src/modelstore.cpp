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

#include "omg/modelstore.hpp"

#include <fstream>
#include <system_error>

#include "omg/errors.hpp"

namespace omg::store {

namespace fs = std::filesystem;

void write_container(const fs::path& path, const SealedModelContainer& c) {
  Bytes data = c.serialize();
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + ": " + ec.message());
}

SealedModelContainer read_container(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  auto size = in.tellg();
  in.seekg(0);
  Bytes data(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (!in) throw IoError("short read from " + path.string());
  return SealedModelContainer::parse(data);
}

Freshness check_freshness(const SealedModelContainer& c,
                          const Nonce& expected_nonce,
                          uint32_t expected_version) {
  if (c.model_version != expected_version || c.nonce != expected_nonce) {
    return Freshness::kRollbackDetected;
  }
  return Freshness::kOk;
}

}  // namespace omg::store
