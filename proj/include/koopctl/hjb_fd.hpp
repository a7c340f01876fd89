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

#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "koopctl/problem.hpp"

namespace koopctl {

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  double spacing = 1.0;
  int count = 1;

  [[nodiscard]] double coordinate(int i) const noexcept { return min + i * spacing; }
};

/// Uniform tensor-product grid in 1 to 3 dimensions, row-major (last axis
/// fastest).
class Grid {
 public:
  Grid() = default;
  /// Throws ValidationError unless (max − min)/spacing is an integer.
  static Grid uniform(const std::vector<std::pair<double, double>>& bounds, double spacing);
  static Grid uniform(const std::vector<std::pair<double, double>>& bounds,
                      const std::vector<double>& spacings);

  [[nodiscard]] std::size_t dim() const noexcept { return axes_.size(); }
  [[nodiscard]] const GridAxis& axis(std::size_t k) const { return axes_.at(k); }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  [[nodiscard]] std::vector<int> multi_index(std::size_t flat) const;
  [[nodiscard]] std::size_t flat_index(std::span<const int> index) const;
  [[nodiscard]] std::vector<double> point(std::size_t flat) const;

 private:
  std::vector<GridAxis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Grid-sampled desirability ψ(x, t).
struct PsiField {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  /// Multilinear interpolation; OutOfDomain outside the grid.
  [[nodiscard]] double interpolate(std::span<const double> x) const;
};

struct FdOptions {
  /// Stability factor c in dt_sub ≤ c·Δx²/max|BBᵀ|.
  double cfl = 0.25;
  /// Explicit sub-steps per time step; dt_sub = dt / substeps.
  int substeps = 1;
};

/// ψ(x, t_f) = exp(−φ(x)/λ).
PsiField terminal_field(const ControlProblem& problem, const Grid& grid);

/// Explicit Euler in reversed time for ∂ψ/∂t = −(L + g)ψ with central
/// differences inside and one-sided upwinded differences on the boundary
/// ring. Throws StabilityViolation at setup and Unstable on blow-up.
PsiField solve_hjb(const ControlProblem& problem, const Grid& grid, double dt,
                   const FdOptions& options = {});

/// u = λ R⁻¹ Uᵀ ∇ψ/ψ from multilinear interpolation of ψ and of
/// central-difference gradients at the enclosing cell corners. The state must
/// lie at least one cell inside the grid (OutOfDomain otherwise).
Eigen::VectorXd fd_control(const PsiField& field, std::span<const double> x,
                           const ControlProblem& problem);

/// Interpolated ψ and ∇ψ with the same rules as fd_control.
std::pair<double, Eigen::VectorXd> fd_psi_gradient(const PsiField& field,
                                                   std::span<const double> x);

/// CSV `x1,...,xN,psi` in row-major grid order, with `#` provenance lines.
void write_csv(std::ostream& os, const PsiField& field, std::string_view provenance = {});

}  // namespace koopctl
