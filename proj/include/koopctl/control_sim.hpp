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

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "koopctl/coeff_tensor.hpp"
#include "koopctl/hjb_fd.hpp"
#include "koopctl/koopman.hpp"
#include "koopctl/problem.hpp"

namespace koopctl {

/// Per-axis box [lower, upper] the controller's observation is projected onto.
struct ClampBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static ClampBox symmetric(std::size_t dim, double bound);
};

Eigen::VectorXd clamp_state(std::span<const double> x, const ClampBox& box);

enum class ControllerKind { Koopman, FiniteDifference, Zero };

/// Time-invariant feedback u(x̃) evaluated at the clamped state x̃. Cheap to
/// copy; the underlying field is shared and immutable.
class Controller {
 public:
  static Controller koopman(const CoeffTensor& coeffs, const ControlProblem& problem, ClampBox box);
  static Controller finite_difference(PsiField field, const ControlProblem& problem, ClampBox box);
  static Controller zero(const ControlProblem& problem, ClampBox box);

  [[nodiscard]] ControllerKind kind() const noexcept { return kind_; }
  [[nodiscard]] const ControlProblem& problem() const noexcept { return *problem_; }
  [[nodiscard]] const ClampBox& clamp_box() const noexcept { return box_; }

  /// May throw DesirabilityUnderflow.
  [[nodiscard]] Eigen::VectorXd evaluate(std::span<const double> x) const;

 private:
  Controller(ControllerKind kind, const ControlProblem& problem, ClampBox box);

  ControllerKind kind_;
  std::shared_ptr<const ControlProblem> problem_;
  ClampBox box_;
  std::shared_ptr<const KoopmanField> koopman_;
  std::shared_ptr<const PsiField> field_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;  // one shorter than states
  std::uint64_t seed = 0;
  std::size_t underflow_steps = 0;  // steps where u = 0 was substituted
  std::string first_underflow;      // message of the first such step
};

/// Euler–Maruyama on the plant with u evaluated from the clamped state at
/// every step. DesirabilityUnderflow substitutes u = 0 for that step and is
/// counted on the trajectory; divergence throws NonFinite.
Trajectory closed_loop_run(const Plant& plant, const Controller& controller,
                           const Eigen::VectorXd& x0, double duration, double dt,
                           std::uint64_t seed);

/// mean |x_i(t) − target_i| over recorded samples with t_from ≤ t ≤ t_to.
Eigen::VectorXd mean_abs_deviation(const Trajectory& trajectory, const Eigen::VectorXd& target,
                                   double t_from, double t_to);

/// CSV `t,x1,...,xN,u<j>...` for the listed input columns, every `stride`-th
/// step. Control cells of the final state row are left empty.
void write_csv(std::ostream& os, const Trajectory& trajectory,
               std::span<const std::size_t> inputs, std::size_t stride = 1,
               std::string_view provenance = {});

}  // namespace koopctl
