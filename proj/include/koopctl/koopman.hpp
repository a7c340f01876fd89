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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "koopctl/coeff_tensor.hpp"
#include "koopctl/poly_operator.hpp"
#include "koopctl/problem.hpp"

namespace koopctl {

/// All operator terms sharing one source displacement. A term x^α ∂^β
/// reads P at target + (β − α) and scales it by Π_k (n_k)_{β_k}, the
/// falling factorial of the source index.
struct StencilEntry {
  std::vector<int> source_offset;
  std::vector<OperatorTerm> terms;

  [[nodiscard]] double weight(std::span<const int> target) const;
};

/// Linear coefficient ODE obtained by pushing L′ + g through the monomial
/// expansion ψ′ = Σ P(n) x^n z^{n_z}. Contributions whose source or target
/// lies outside the cutoffs are dropped.
///
/// apply() returns the coefficients of (L′ + g)ψ′, i.e. dP/dτ in reversed
/// time τ = t_f − t; in forward time dP/dt = −apply(P).
class CoeffOde {
 public:
  /// Throws CutoffTooSmall when a term displaces an index by at least the
  /// extent of its axis.
  static CoeffOde compile(const PolyOperator& generator, const PolyOperator& g_term,
                          std::vector<int> extents);

  [[nodiscard]] const std::vector<int>& extents() const noexcept { return extents_; }
  [[nodiscard]] const std::vector<StencilEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t nonzeros() const noexcept { return values_.size(); }

  [[nodiscard]] CoeffTensor apply(const CoeffTensor& p) const;

  /// Dense kernel on flat lexicographic arrays; requires a compiled matrix
  /// (lattices up to kDenseLatticeLimit).
  void apply(std::span<const double> in, std::span<double> out) const;
  [[nodiscard]] bool has_matrix() const noexcept { return !row_start_.empty(); }

 private:
  void apply_sparse(const CoeffTensor& p, CoeffTensor& out) const;

  std::vector<int> extents_;
  std::vector<StencilEntry> entries_;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

/// Classical RK4 from t_f down to t_i with fixed step dt. Throws NonFinite
/// if any coefficient overflows.
CoeffTensor integrate_backward(const CoeffOde& ode, const CoeffTensor& terminal, double t_final,
                               double t_initial, double dt);

/// Smallest ψ accepted when forming a feedback control.
inline constexpr double kPsiFloor = 1e-12;

/// Evaluator for ψ(x) = Σ P(n) x^n z^{n_z}, z = exp(−φ(x)/λ), and its
/// x-gradient including the dependence through z.
class KoopmanField {
 public:
  KoopmanField(const CoeffTensor& coeffs, const Polynomial& terminal_cost, double lambda);

  struct Value {
    double psi = 0.0;
    Eigen::VectorXd gradient;
  };

  [[nodiscard]] double psi(std::span<const double> x) const;
  [[nodiscard]] Value evaluate(std::span<const double> x) const;
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_ = 0;
  std::vector<int> extents_;
  std::vector<int> indices_;  // rank entries per stored coefficient
  std::vector<double> values_;
  Polynomial terminal_cost_;
  std::vector<Polynomial> cost_gradient_;
  double lambda_ = 1.0;
};

double eval_psi(const CoeffTensor& coeffs, std::span<const double> x,
                const Polynomial& terminal_cost, double lambda);

/// u = λ R⁻¹ Uᵀ ∇ψ / ψ. Throws DesirabilityUnderflow when ψ ≤ kPsiFloor.
Eigen::VectorXd eval_control(const CoeffTensor& coeffs, std::span<const double> x,
                             const ControlProblem& problem);
Eigen::VectorXd control_from_gradient(const ControlProblem& problem, double psi,
                                      const Eigen::VectorXd& gradient,
                                      std::span<const double> x);

/// ito_extend → compile → integrate_backward from the terminal condition.
/// `x_cutoff` applies to every state axis; the z axis holds n_z ∈ {0, 1}.
CoeffTensor solve_koopman(const ControlProblem& problem, int x_cutoff, double dt);
CoeffTensor solve_koopman(const ControlProblem& problem, std::vector<int> extents, double dt);

}  // namespace koopctl
