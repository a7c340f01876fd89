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

#include <cstddef>

namespace koopctl {

/// Fixed-step schedule covering `span` with steps of `dt`. When span/dt is
/// an integer up to a relative 1e-9, exactly that many equal steps are taken;
/// otherwise the remainder becomes one final partial step.
struct StepPlan {
  std::size_t full_steps = 0;
  double step = 0.0;
  double last_step = 0.0;  // 0 when there is no partial step

  [[nodiscard]] std::size_t total_steps() const noexcept {
    return full_steps + (last_step > 0.0 ? 1 : 0);
  }
  [[nodiscard]] double step_size(std::size_t k) const noexcept {
    return k < full_steps ? step : last_step;
  }
};

StepPlan plan_steps(double span, double dt);

}  // namespace koopctl
