/*
 Copyright 2026 The koopctl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace koopctl {

enum class ErrorCode {
  NotProportional,
  SingularWeight,
  NoiseOnUncontrolled,
  NonQuadraticCost,
  CutoffTooSmall,
  NonFinite,
  DesirabilityUnderflow,
  StabilityViolation,
  Unstable,
  OutOfDomain,
  ParseError,
  ValidationError,
  IoError,
};

/// Machine-readable name, e.g. "NoiseOnUncontrolled".
std::string_view error_name(ErrorCode code) noexcept;

/// Process exit status for the CLI: 2 validation, 3 numerical failure, 4 I/O.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace koopctl
