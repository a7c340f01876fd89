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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace koopctl {

using Exponents = std::vector<int>;

/// Sparse multivariate polynomial with real coefficients.
///
/// Terms are keyed by their exponent vector and kept in lexicographic order,
/// so iteration, printing and comparison are deterministic. Terms whose
/// coefficient becomes exactly zero are removed.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::size_t num_vars) : num_vars_(num_vars) {}

  static Polynomial constant(std::size_t num_vars, double value);
  static Polynomial variable(std::size_t num_vars, std::size_t index);
  static Polynomial monomial(double coefficient, Exponents exponents);

  /// Parses sums of monomials such as "x2 - 1.5*x1^2*x2 + 0.25".
  /// Variables are named x1..xN; with allow_z, `z` is an extra variable at
  /// index N and the result has N + 1 variables.
  static Polynomial parse(std::string_view text, std::size_t num_vars,
                          bool allow_z = false);

  [[nodiscard]] std::size_t num_vars() const noexcept { return num_vars_; }
  [[nodiscard]] const std::map<Exponents, double>& terms() const noexcept {
    return terms_;
  }
  [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
  [[nodiscard]] int degree() const noexcept;
  [[nodiscard]] int degree_in(std::size_t index) const noexcept;
  [[nodiscard]] double coefficient(const Exponents& exponents) const;
  [[nodiscard]] bool all_finite() const noexcept;

  void add_term(const Exponents& exponents, double coefficient);

  [[nodiscard]] double operator()(std::span<const double> x) const;

  [[nodiscard]] Polynomial derivative(std::size_t index) const;

  /// Same polynomial viewed over `num_vars` >= current variables; the extra
  /// variables are appended with exponent zero.
  [[nodiscard]] Polynomial lifted(std::size_t num_vars) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double scalar);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

  /// Round-trippable text form ("0" for the zero polynomial).
  [[nodiscard]] std::string to_string(bool with_z = false) const;

 private:
  void check_arity(const Polynomial& other) const;

  std::size_t num_vars_ = 0;
  std::map<Exponents, double> terms_;
};

/// Flat, allocation-free evaluator for hot loops (path simulation, grids).
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  [[nodiscard]] double operator()(const double* x) const noexcept;
  [[nodiscard]] std::size_t num_vars() const noexcept { return num_vars_; }

 private:
  std::size_t num_vars_ = 0;
  std::vector<double> coefficients_;
  std::vector<int> exponents_;  // row-major, num_vars_ per term
};

}  // namespace koopctl
