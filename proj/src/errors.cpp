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

#include "omg/errors.hpp"

namespace omg {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kMalformedData: return "malformed-data";
    case ErrorCode::kWrongState: return "wrong-state";
    case ErrorCode::kCoreBusy: return "core-busy";
    case ErrorCode::kEmptyPeripheral: return "empty-peripheral";
    case ErrorCode::kLicenseDenied: return "license-denied";
    case ErrorCode::kAttestationRejected: return "attestation-rejected";
    case ErrorCode::kUnsealFailure: return "unseal-failure";
    case ErrorCode::kRollbackDetected: return "rollback-detected";
    case ErrorCode::kUnknownEnclave: return "unknown-enclave";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kCryptoFailure: return "crypto-failure";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace omg
