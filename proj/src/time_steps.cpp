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

#include "koopctl/time_steps.hpp"

#include <cmath>

#include "koopctl/error.hpp"

namespace koopctl {

StepPlan plan_steps(double span, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::ValidationError, "dt must be positive");
  if (!(span >= 0.0) || !std::isfinite(span)) {
    throw Error(ErrorCode::ValidationError, "time span must be non-negative");
  }
  StepPlan plan;
  plan.step = dt;
  const double ratio = span / dt;
  const double nearest = std::round(ratio);
  if (std::fabs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    plan.full_steps = static_cast<std::size_t>(nearest);
    return plan;
  }
  plan.full_steps = static_cast<std::size_t>(std::floor(ratio));
  plan.last_step = span - static_cast<double>(plan.full_steps) * dt;
  return plan;
}

}  // namespace koopctl
