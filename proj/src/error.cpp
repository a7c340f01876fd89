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

#include "koopctl/error.hpp"

namespace koopctl {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotProportional: return "NotProportional";
    case ErrorCode::SingularWeight: return "SingularWeight";
    case ErrorCode::NoiseOnUncontrolled: return "NoiseOnUncontrolled";
    case ErrorCode::NonQuadraticCost: return "NonQuadraticCost";
    case ErrorCode::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DesirabilityUnderflow: return "DesirabilityUnderflow";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::DesirabilityUnderflow:
    case ErrorCode::Unstable:
      return 3;
    case ErrorCode::IoError:
      return 4;
    default:
      return 2;
  }
}

}  // namespace koopctl
