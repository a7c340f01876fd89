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

#include "koopctl/poly_operator.hpp"

#include <sstream>

#include "koopctl/error.hpp"

namespace koopctl {
namespace {

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= static_cast<double>(n - j);
  return r;
}

Exponents unit(std::size_t n, std::size_t index, int power = 1) {
  Exponents e(n, 0);
  e[index] = power;
  return e;
}

}  // namespace

int OperatorTerm::derivative_order() const noexcept {
  int s = 0;
  for (int d : derivs) s += d;
  return s;
}

PolyOperator PolyOperator::differential(const Polynomial& coefficient, const Exponents& derivs) {
  PolyOperator op(coefficient.num_vars());
  for (const auto& [powers, c] : coefficient.terms()) op.add_term(c, powers, derivs);
  return op;
}

PolyOperator PolyOperator::multiplication(const Polynomial& factor) {
  return differential(factor, Exponents(factor.num_vars(), 0));
}

void PolyOperator::add_term(double coefficient, const Exponents& powers, const Exponents& derivs) {
  if (powers.size() != num_vars_ || derivs.size() != num_vars_) {
    throw Error(ErrorCode::ValidationError, "operator term arity mismatch");
  }
  if (coefficient == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(Key{derivs, powers}, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) terms_.erase(it);
  }
}

std::vector<OperatorTerm> PolyOperator::terms() const {
  std::vector<OperatorTerm> out;
  out.reserve(terms_.size());
  for (const auto& [key, c] : terms_) out.push_back(OperatorTerm{c, key.second, key.first});
  return out;
}

Polynomial PolyOperator::coefficient_of(const Exponents& derivs) const {
  Polynomial p(num_vars_);
  for (const auto& [key, c] : terms_) {
    if (key.first == derivs) p.add_term(key.second, c);
  }
  return p;
}

PolyOperator& PolyOperator::operator+=(const PolyOperator& other) {
  if (num_vars_ == 0 && terms_.empty()) num_vars_ = other.num_vars_;
  if (other.num_vars_ != num_vars_) {
    throw Error(ErrorCode::ValidationError, "operator arity mismatch");
  }
  for (const auto& [key, c] : other.terms_) add_term(c, key.second, key.first);
  return *this;
}

std::string PolyOperator::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [key, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << '(' << Polynomial::monomial(c, key.second).to_string(true) << ')';
    const Exponents& d = key.first;
    for (std::size_t k = 0; k < d.size(); ++k) {
      for (int j = 0; j < d[k]; ++j) {
        os << "*d_" << (k + 1 == d.size() ? std::string("z") : "x" + std::to_string(k + 1));
      }
    }
  }
  return os.str();
}

Polynomial apply_operator(const PolyOperator& op, const Polynomial& f) {
  if (op.num_vars() != f.num_vars()) {
    throw Error(ErrorCode::ValidationError, "operator and polynomial arity differ");
  }
  const std::size_t n = f.num_vars();
  Polynomial result(n);
  Exponents e(n);
  for (const OperatorTerm& t : op.terms()) {
    for (const auto& [m, d] : f.terms()) {
      double factor = t.coefficient * d;
      bool vanishes = false;
      for (std::size_t k = 0; k < n; ++k) {
        if (m[k] < t.derivs[k]) {
          vanishes = true;
          break;
        }
        factor *= falling_factorial(m[k], t.derivs[k]);
        e[k] = m[k] - t.derivs[k] + t.powers[k];
      }
      if (!vanishes) result.add_term(e, factor);
    }
  }
  return result;
}

ExtendedGenerator ito_extend(const ControlProblem& problem) {
  const std::size_t n = problem.dim();
  const std::size_t nv = n + 1;
  const std::size_t n_w = problem.noise_dim();
  if (problem.terminal_cost().degree() > 2 || problem.running_cost().degree() > 2) {
    throw Error(ErrorCode::NonQuadraticCost,
                "terminal and running costs must be quadratic forms");
  }
  const double lambda = problem.lambda();
  const Eigen::MatrixXd& b = problem.diffusion();
  const Eigen::MatrixXd s = b * b.transpose();

  const Polynomial z = Polynomial::variable(nv, n);
  const Polynomial phi = problem.terminal_cost().lifted(nv);

  std::vector<Polynomial> grad(n);
  std::vector<Polynomial> dz(n);  // ∂z/∂x_i = −z φ_i / λ
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = phi.derivative(i);
    dz[i] = (z * grad[i]) * (-1.0 / lambda);
  }

  std::vector<Polynomial> drift(n);
  for (std::size_t i = 0; i < n; ++i) drift[i] = problem.drift()[i].lifted(nv);

  // ã = Σ a_i ∂_i z + ½ Σ [BBᵀ]_ij ∂_i∂_j z,  ∂_i∂_j z = z (φ_i φ_j/λ² − φ_ij/λ)
  Polynomial z_drift(nv);
  for (std::size_t i = 0; i < n; ++i) z_drift += drift[i] * dz[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double sij = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (sij == 0.0) continue;
      Polynomial second = (grad[i] * grad[j]) * (1.0 / (lambda * lambda)) -
                          grad[i].derivative(j) * (1.0 / lambda);
      z_drift += (z * second) * (0.5 * sij);
    }
  }

  // b̃_k = Σ_i B_ik ∂_i z
  std::vector<Polynomial> z_noise(n_w, Polynomial(nv));
  for (std::size_t k = 0; k < n_w; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double bik = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (bik != 0.0) z_noise[k] += dz[i] * bik;
    }
  }

  ExtendedGenerator out;
  PolyOperator& gen = out.generator;
  gen = PolyOperator(nv);
  for (std::size_t i = 0; i < n; ++i) gen += PolyOperator::differential(drift[i], unit(nv, i));
  gen += PolyOperator::differential(z_drift, unit(nv, n));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double sij = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (sij == 0.0) continue;
      Exponents d = unit(nv, i);
      d[j] += 1;
      // ½ Σ_{i,j} counts each off-diagonal pair twice.
      const double c = i == j ? 0.5 * sij : sij;
      gen += PolyOperator::differential(Polynomial::constant(nv, c), d);
    }
  }

  // Mixed x–z block of B′B′ᵀ: [B b̃]_i, counted twice by the ½ Σ.
  for (std::size_t i = 0; i < n; ++i) {
    Polynomial cross(nv);
    for (std::size_t k = 0; k < n_w; ++k) {
      const double bik = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (bik != 0.0) cross += z_noise[k] * bik;
    }
    Exponents d = unit(nv, i);
    d[n] = 1;
    gen += PolyOperator::differential(cross, d);
  }

  Polynomial zz(nv);
  for (const Polynomial& bk : z_noise) zz += bk * bk;
  gen += PolyOperator::differential(zz * 0.5, unit(nv, n, 2));

  out.g_term = PolyOperator::multiplication(problem.running_cost().lifted(nv) * (-1.0 / lambda));

  out.sde.drift = drift;
  out.sde.drift.push_back(z_drift);
  out.sde.diffusion.assign(nv, std::vector<Polynomial>(n_w, Polynomial(nv)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n_w; ++k) {
      out.sde.diffusion[i][k] = Polynomial::constant(
          nv, b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    }
  }
  out.sde.diffusion[n] = z_noise;
  return out;
}

}  // namespace koopctl
