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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "koopctl/polynomial.hpp"
#include "koopctl/problem.hpp"

namespace koopctl {

/// One term c · x^α z^γ ∂^β over the extended state (x₁…x_N, z).
/// `powers` and `derivs` both have N + 1 entries, the last one for z.
struct OperatorTerm {
  double coefficient = 0.0;
  Exponents powers;
  Exponents derivs;

  [[nodiscard]] int derivative_order() const noexcept;
};

/// Linear differential operator with polynomial coefficients, stored as a
/// canonical sum of OperatorTerms ordered by (derivs, powers).
class PolyOperator {
 public:
  PolyOperator() = default;
  explicit PolyOperator(std::size_t num_vars) : num_vars_(num_vars) {}

  /// coefficient(x, z) · ∂^derivs
  static PolyOperator differential(const Polynomial& coefficient, const Exponents& derivs);
  /// Multiplication by a polynomial (no derivatives).
  static PolyOperator multiplication(const Polynomial& factor);

  void add_term(double coefficient, const Exponents& powers, const Exponents& derivs);

  [[nodiscard]] std::size_t num_vars() const noexcept { return num_vars_; }
  [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
  [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
  [[nodiscard]] std::vector<OperatorTerm> terms() const;

  /// Coefficient polynomial multiplying ∂^derivs (zero if absent).
  [[nodiscard]] Polynomial coefficient_of(const Exponents& derivs) const;

  PolyOperator& operator+=(const PolyOperator& other);
  friend PolyOperator operator+(PolyOperator a, const PolyOperator& b) { return a += b; }
  friend bool operator==(const PolyOperator& a, const PolyOperator& b) = default;

  [[nodiscard]] std::string to_string() const;

 private:
  using Key = std::pair<Exponents, Exponents>;  // (derivs, powers)
  std::size_t num_vars_ = 0;
  std::map<Key, double> terms_;
};

/// Exact op·f by term-wise differentiation and multiplication.
Polynomial apply_operator(const PolyOperator& op, const Polynomial& f);

/// SDE of the extended state (x, z) with z = exp(−φ(x)/λ): drift (a, ã) and
/// diffusion rows (B, b̃ᵀ). Entries are polynomials over N + 1 variables.
struct ExtendedSde {
  std::vector<Polynomial> drift;
  std::vector<std::vector<Polynomial>> diffusion;  // (N+1) × N_W
};

struct ExtendedGenerator {
  PolyOperator generator;  // L′ over (x, z)
  PolyOperator g_term;     // multiplication by g = −V/λ
  ExtendedSde sde;
};

/// Builds the backward generator of the observable-extended uncontrolled
/// dynamics via Itô's lemma. Requires φ and V of degree at most two
/// (NonQuadraticCost otherwise).
ExtendedGenerator ito_extend(const ControlProblem& problem);

}  // namespace koopctl
