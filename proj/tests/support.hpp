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

#include <cmath>
#include <random>
#include <vector>

#include "koopctl/coeff_tensor.hpp"
#include "koopctl/problem.hpp"

namespace koopctl::testing {

struct OscillatorParams {
  double epsilon = 1.0;
  double b22 = 1.0;
  double lambda = 0.25;
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  double c1 = 1.0;
  double c2 = 0.0;
};

/// Control model of the noisy van der Pol oscillator for arbitrary
/// parameters; R is chosen so that the proportionality relation holds.
inline ControlProblem oscillator_problem(const OscillatorParams& p, double t_final = 0.1) {
  ProblemSpec spec;
  spec.drift = {Polynomial::parse("x2", 2),
                Polynomial::parse("x2", 2) * p.epsilon -
                    Polynomial::parse("x1^2*x2", 2) * p.epsilon - Polynomial::parse("x1", 2)};
  spec.diffusion = Eigen::MatrixXd::Zero(2, 2);
  spec.diffusion(1, 1) = p.b22;
  spec.control_map = Eigen::MatrixXd::Zero(2, 2);
  spec.control_map(1, 1) = 1.0;
  spec.control_weight = Eigen::MatrixXd::Zero(2, 2);
  spec.control_weight(1, 1) = p.lambda / (p.b22 * p.b22);
  const std::vector<double> c{p.c1, p.c2};
  const std::vector<double> s{p.sigma1, p.sigma2};
  spec.terminal_cost = quadratic_cost(c, s);
  spec.running_cost = quadratic_cost(c, s);
  spec.t_initial = 0.0;
  spec.t_final = t_final;
  spec.lambda = p.lambda;
  return ControlProblem::create(spec);
}

/// Right-hand side of the coefficient ODE for the oscillator, written out
/// term by term from the hand derivation (the σ^c in the printed form is σ²).
/// Sources outside the lattice read as zero.
inline CoeffTensor oscillator_rhs_by_hand(const CoeffTensor& p, const OscillatorParams& q) {
  const auto& ext = p.extents();
  CoeffTensor out = p.zeros_like();
  auto P = [&](int a, int b, int c) {
    if (a < 0 || b < 0 || c < 0 || a >= ext[0] || b >= ext[1] || c >= ext[2]) return 0.0;
    const int idx[3] = {a, b, c};
    return p.at(idx);
  };
  const double eps = q.epsilon;
  const double B2 = q.b22 * q.b22;
  const double lam = q.lambda;
  const double s1 = q.sigma1 * q.sigma1;
  const double s2 = q.sigma2 * q.sigma2;
  const double c1 = q.c1;
  const double c2 = q.c2;
  for (int n1 = 0; n1 < ext[0]; ++n1) {
    for (int n2 = 0; n2 < ext[1]; ++n2) {
      for (int nz = 0; nz < ext[2]; ++nz) {
        double r = 0.0;
        r += -1.0 / (2 * lam * s2) * P(n1, n2 - 2, nz);
        r += c2 / (lam * s2) * P(n1, n2 - 1, nz);
        r += -c2 * c2 / (2 * lam * s2) * P(n1, n2, nz);
        r += -1.0 / (2 * lam * s1) * P(n1 - 2, n2, nz);
        r += c1 / (lam * s1) * P(n1 - 1, n2, nz);
        r += -c1 * c1 / (2 * lam * s1) * P(n1, n2, nz);
        r += (n1 + 1) * P(n1 + 1, n2 - 1, nz);
        r += -eps * n2 * P(n1 - 2, n2, nz);
        r += eps * n2 * P(n1, n2, nz);
        r += -(n2 + 1) * P(n1 - 1, n2 + 1, nz);
        r += eps / (lam * s2) * nz * P(n1 - 2, n2 - 2, nz);
        r += -eps * c2 / (lam * s2) * nz * P(n1 - 2, n2 - 1, nz);
        r += -eps / (lam * s2) * nz * P(n1, n2 - 2, nz);
        r += eps * c2 / (lam * s2) * nz * P(n1, n2 - 1, nz);
        r += -B2 / (2 * lam * s2) * nz * P(n1, n2, nz);
        r += 1.0 / (lam * s2) * nz * P(n1 - 1, n2 - 1, nz);
        r += -c2 / (lam * s2) * nz * P(n1 - 1, n2, nz);
        r += -1.0 / (lam * s1) * nz * P(n1 - 1, n2 - 1, nz);
        r += c1 / (lam * s1) * nz * P(n1, n2 - 1, nz);
        r += B2 / (2 * lam * lam * s2 * s2) * nz * P(n1, n2 - 2, nz);
        r += -B2 * c2 / (lam * lam * s2 * s2) * nz * P(n1, n2 - 1, nz);
        r += B2 * c2 * c2 / (2 * lam * lam * s2 * s2) * nz * P(n1, n2, nz);
        r += B2 / 2 * (n2 + 2) * (n2 + 1) * P(n1, n2 + 2, nz);
        r += -B2 / (lam * s2) * n2 * nz * P(n1, n2, nz);
        r += B2 * c2 / (lam * s2) * (n2 + 1) * nz * P(n1, n2 + 1, nz);
        r += B2 / (2 * lam * lam * s2 * s2) * nz * (nz - 1) * P(n1, n2 - 2, nz);
        r += -B2 * c2 / (lam * lam * s2 * s2) * nz * (nz - 1) * P(n1, n2 - 1, nz);
        r += B2 * c2 * c2 / (2 * lam * lam * s2 * s2) * nz * (nz - 1) * P(n1, n2, nz);
        const int idx[3] = {n1, n2, nz};
        out.set(idx, r);
      }
    }
  }
  return out;
}

inline CoeffTensor random_tensor(const std::vector<int>& extents, std::mt19937_64& rng,
                                 Storage storage = Storage::Auto) {
  CoeffTensor t(extents, 0.0, storage);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < t.lattice_size(); ++i) t.set_flat(i, u(rng));
  return t;
}

/// 1-D problem dx = a(x) dt + b dW, u enters with U = b, R = λ so that λ is
/// consistent; φ and V given as polynomials in x1.
inline ControlProblem scalar_problem(const char* drift, double b, double lambda,
                                     const char* terminal, const char* running,
                                     double t_final = 0.1) {
  ProblemSpec spec;
  spec.drift = {Polynomial::parse(drift, 1)};
  spec.diffusion = Eigen::MatrixXd::Constant(1, 1, b);
  spec.control_map = Eigen::MatrixXd::Constant(1, 1, b == 0.0 ? 0.0 : 1.0);
  spec.control_weight = Eigen::MatrixXd::Constant(1, 1, b == 0.0 ? 1.0 : lambda / (b * b));
  spec.terminal_cost = Polynomial::parse(terminal, 1);
  spec.running_cost = Polynomial::parse(running, 1);
  spec.t_initial = 0.0;
  spec.t_final = t_final;
  spec.lambda = lambda;
  return ControlProblem::create(spec);
}

}  // namespace koopctl::testing
