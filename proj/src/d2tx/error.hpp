// Copyright 2026 The d2tx Authors
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

#ifndef D2TX_ERROR_HPP_
#define D2TX_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace d2tx {

// Mirrors d2tx_status in the C API; keep the numeric values in sync.
enum class ErrorCode {
  kInvalidArgument = 1,
  kParse = 2,
  kIo = 3,
  kBridge = 4,
  kProtocol = 5,
  kNotFound = 6,
  kValidation = 7,
  kRuntime = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define D2TX_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Code, what) {}      \
  };

D2TX_DEFINE_ERROR(InvalidArgument, ErrorCode::kInvalidArgument)
D2TX_DEFINE_ERROR(ParseError, ErrorCode::kParse)
D2TX_DEFINE_ERROR(IoError, ErrorCode::kIo)
D2TX_DEFINE_ERROR(BridgeError, ErrorCode::kBridge)
D2TX_DEFINE_ERROR(ProtocolError, ErrorCode::kProtocol)
D2TX_DEFINE_ERROR(NotFoundError, ErrorCode::kNotFound)
D2TX_DEFINE_ERROR(ValidationError, ErrorCode::kValidation)
D2TX_DEFINE_ERROR(RuntimeError, ErrorCode::kRuntime)

#undef D2TX_DEFINE_ERROR

}  // namespace d2tx

#endif  // D2TX_ERROR_HPP_
