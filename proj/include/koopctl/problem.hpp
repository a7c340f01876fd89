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

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "koopctl/polynomial.hpp"

namespace koopctl {

/// Tolerance for the noise/control proportionality check B Bᵀ = λ U R⁻¹ Uᵀ.
inline constexpr double kLambdaTolerance = 1e-12;

/// Returns λ with B Bᵀ = λ U R⁻¹ Uᵀ entrywise, where R is inverted on the
/// inputs that U actually drives.
///
/// Throws NoiseOnUncontrolled when a coordinate carries noise but no control
/// authority, SingularWeight when R restricted to the driven inputs is not
/// positive definite, and NotProportional when no single positive λ fits.
double compute_lambda(const Eigen::MatrixXd& diffusion, const Eigen::MatrixXd& control_map,
                      const Eigen::MatrixXd& control_weight);

/// Σ_i (x_i − c_i)² / (2 σ_i²). Every width must be positive.
Polynomial quadratic_cost(std::span<const double> centers, std::span<const double> widths);

/// The dynamics a controller acts on: dx = (a(x) + U u) dt + B dW.
struct Plant {
  std::vector<Polynomial> drift;
  Eigen::MatrixXd diffusion;
  Eigen::MatrixXd control_map;

  [[nodiscard]] std::size_t dim() const noexcept { return drift.size(); }
};

struct ProblemSpec {
  std::vector<Polynomial> drift;  // one polynomial in x per coordinate
  Eigen::MatrixXd diffusion;      // N × N_W
  Eigen::MatrixXd control_map;    // N × N_inp
  Eigen::MatrixXd control_weight; // N_inp × N_inp
  Polynomial terminal_cost;       // φ(x)
  Polynomial running_cost;        // V(x)
  double t_initial = 0.0;
  double t_final = 0.0;
  std::optional<double> lambda;   // computed from the matrices when absent
};

/// Validated, immutable instance of a quadratic-control-cost problem with
/// time-invariant polynomial drift and constant diffusion.
class ControlProblem {
 public:
  /// Throws ValidationError on shape/finite/horizon violations and the
  /// compute_lambda errors when λ is omitted. A supplied λ must satisfy the
  /// proportionality relation within kLambdaTolerance.
  static ControlProblem create(ProblemSpec spec);

  [[nodiscard]] std::size_t dim() const noexcept { return spec_.drift.size(); }
  [[nodiscard]] std::size_t noise_dim() const noexcept {
    return static_cast<std::size_t>(spec_.diffusion.cols());
  }
  [[nodiscard]] std::size_t input_dim() const noexcept {
    return static_cast<std::size_t>(spec_.control_map.cols());
  }
  [[nodiscard]] const std::vector<Polynomial>& drift() const noexcept { return spec_.drift; }
  [[nodiscard]] const Eigen::MatrixXd& diffusion() const noexcept { return spec_.diffusion; }
  [[nodiscard]] const Eigen::MatrixXd& control_map() const noexcept { return spec_.control_map; }
  [[nodiscard]] const Eigen::MatrixXd& control_weight() const noexcept {
    return spec_.control_weight;
  }
  [[nodiscard]] const Polynomial& terminal_cost() const noexcept { return spec_.terminal_cost; }
  [[nodiscard]] const Polynomial& running_cost() const noexcept { return spec_.running_cost; }
  [[nodiscard]] double t_initial() const noexcept { return spec_.t_initial; }
  [[nodiscard]] double t_final() const noexcept { return spec_.t_final; }
  [[nodiscard]] double horizon() const noexcept { return spec_.t_final - spec_.t_initial; }
  [[nodiscard]] double lambda() const noexcept { return *spec_.lambda; }

  /// λ R⁻¹ Uᵀ (N_inp × N), zero rows for inputs U does not drive. The
  /// optimal feedback is this gain applied to ∇ψ / ψ.
  [[nodiscard]] const Eigen::MatrixXd& feedback_gain() const noexcept { return gain_; }

  /// Indices of the inputs that U drives.
  [[nodiscard]] const std::vector<std::size_t>& controlled_inputs() const noexcept {
    return controlled_;
  }

  [[nodiscard]] Plant plant() const;

 private:
  explicit ControlProblem(ProblemSpec spec) : spec_(std::move(spec)) {}

  ProblemSpec spec_;
  Eigen::MatrixXd gain_;
  std::vector<std::size_t> controlled_;
};

struct VanDerPolParams {
  double epsilon = 1.0;
  double b11 = 0.1;  // noise on x1 in the plant only
  double b22 = 1.0;
  double u22 = 1.0;
  double r22 = 0.25;
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  double center1 = 1.0;
  double center2 = 0.0;
  double t_initial = 0.0;
  double t_final = 0.1;
};

/// a(x) = (x2, ε(1 − x1²)x2 − x1).
std::vector<Polynomial> van_der_pol_drift(double epsilon);

/// Control model: noise only on the driven coordinate x2, φ = V = quadratic
/// around the targets.
ControlProblem van_der_pol_problem(const VanDerPolParams& params = {});

/// The system actually being controlled, with noise on both coordinates.
Plant van_der_pol_plant(const VanDerPolParams& params = {});

}  // namespace koopctl
