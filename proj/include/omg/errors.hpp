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

#ifndef OMG_ERRORS_HPP_
#define OMG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace omg {

// Stable error classes. Each maps to a distinct CLI exit code (see
// docs/cli.md).
enum class ErrorCode {
  kUsage = 2,
  kUnsupportedFormat = 3,
  kMalformedData = 4,
  kWrongState = 5,
  kCoreBusy = 6,
  kEmptyPeripheral = 7,
  kLicenseDenied = 8,
  kAttestationRejected = 9,
  kUnsealFailure = 10,
  kRollbackDetected = 11,
  kUnknownEnclave = 12,
  kTransport = 13,
  kCryptoFailure = 14,
  kIo = 15,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define OMG_DEFINE_ERROR(NAME, CODE)                      \
  class NAME : public Error {                             \
   public:                                                \
    explicit NAME(const std::string& what)                \
        : Error(ErrorCode::CODE, what) {}                 \
  }

OMG_DEFINE_ERROR(UnsupportedFormatError, kUnsupportedFormat);
OMG_DEFINE_ERROR(MalformedDataError, kMalformedData);
OMG_DEFINE_ERROR(WrongStateError, kWrongState);
OMG_DEFINE_ERROR(CoreBusyError, kCoreBusy);
OMG_DEFINE_ERROR(EmptyPeripheralError, kEmptyPeripheral);
OMG_DEFINE_ERROR(LicenseDeniedError, kLicenseDenied);
OMG_DEFINE_ERROR(AttestationRejectedError, kAttestationRejected);
OMG_DEFINE_ERROR(UnsealFailureError, kUnsealFailure);
OMG_DEFINE_ERROR(RollbackDetectedError, kRollbackDetected);
OMG_DEFINE_ERROR(UnknownEnclaveError, kUnknownEnclave);
OMG_DEFINE_ERROR(TransportError, kTransport);
OMG_DEFINE_ERROR(CryptoError, kCryptoFailure);
OMG_DEFINE_ERROR(IoError, kIo);

#undef OMG_DEFINE_ERROR

}  // namespace omg

#endif  // OMG_ERRORS_HPP_
