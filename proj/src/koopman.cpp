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

#include "koopctl/koopman.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/time_steps.hpp"

namespace koopctl {
namespace {

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= static_cast<double>(n - j);
  return r;
}

std::string format_state(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace

double StencilEntry::weight(std::span<const int> target) const {
  double w = 0.0;
  for (const OperatorTerm& t : terms) {
    double f = t.coefficient;
    for (std::size_t k = 0; k < target.size(); ++k) {
      f *= falling_factorial(target[k] + source_offset[k], t.derivs[k]);
    }
    w += f;
  }
  return w;
}

CoeffOde CoeffOde::compile(const PolyOperator& generator, const PolyOperator& g_term,
                           std::vector<int> extents) {
  PolyOperator combined = generator;
  combined += g_term;
  if (!combined.is_zero() && combined.num_vars() != extents.size()) {
    throw Error(ErrorCode::ValidationError, "operator arity does not match tensor rank");
  }

  std::map<std::vector<int>, std::vector<OperatorTerm>> grouped;
  for (OperatorTerm& t : combined.terms()) {
    std::vector<int> offset(extents.size());
    for (std::size_t k = 0; k < extents.size(); ++k) {
      offset[k] = t.derivs[k] - t.powers[k];
      if (std::abs(offset[k]) >= extents[k]) {
        throw Error(ErrorCode::CutoffTooSmall,
                    "operator shifts axis " + std::to_string(k + 1) + " by " +
                        std::to_string(offset[k]) + " but the cutoff is " +
                        std::to_string(extents[k]));
      }
    }
    grouped[offset].push_back(std::move(t));
  }

  CoeffOde ode;
  ode.extents_ = std::move(extents);
  for (auto& [offset, terms] : grouped) ode.entries_.push_back({offset, std::move(terms)});

  const CoeffTensor shape(ode.extents_);
  if (!shape.is_dense()) return ode;

  const std::size_t size = shape.lattice_size();
  ode.row_start_.reserve(size + 1);
  ode.row_start_.push_back(0);
  std::vector<int> source(shape.rank());
  for (std::size_t flat = 0; flat < size; ++flat) {
    const MultiIndex target = shape.multi_index(flat);
    for (const StencilEntry& e : ode.entries_) {
      for (std::size_t k = 0; k < source.size(); ++k) source[k] = target[k] + e.source_offset[k];
      if (!shape.in_range(source)) continue;
      const double w = e.weight(target);
      if (w == 0.0) continue;
      ode.columns_.push_back(shape.flat_index(source));
      ode.values_.push_back(w);
    }
    ode.row_start_.push_back(ode.columns_.size());
  }
  return ode;
}

void CoeffOde::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t rows = row_start_.size() - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t j = row_start_[r]; j < row_start_[r + 1]; ++j) acc += values_[j] * in[columns_[j]];
    out[r] = acc;
  }
}

void CoeffOde::apply_sparse(const CoeffTensor& p, CoeffTensor& out) const {
  std::vector<int> target(extents_.size());
  p.for_each_nonzero([&](std::size_t flat, double v) {
    const MultiIndex source = p.multi_index(flat);
    for (const StencilEntry& e : entries_) {
      for (std::size_t k = 0; k < target.size(); ++k) target[k] = source[k] - e.source_offset[k];
      if (!p.in_range(target)) continue;
      const double w = e.weight(target);
      if (w != 0.0) out.add_flat(p.flat_index(target), w * v);
    }
  });
}

CoeffTensor CoeffOde::apply(const CoeffTensor& p) const {
  if (p.extents() != extents_) throw Error(ErrorCode::ValidationError, "tensor extents differ from ODE");
  CoeffTensor out = p.zeros_like();
  if (p.is_dense() && has_matrix()) {
    apply(p.dense_values(), out.dense_values());
  } else {
    apply_sparse(p, out);
  }
  return out;
}

CoeffTensor integrate_backward(const CoeffOde& ode, const CoeffTensor& terminal, double t_final,
                               double t_initial, double dt) {
  if (std::fabs(terminal.time() - t_final) > 1e-12 * std::max(1.0, std::fabs(t_final))) {
    throw Error(ErrorCode::ValidationError, "terminal tensor time must equal t_final");
  }
  if (!(t_final >= t_initial)) throw Error(ErrorCode::ValidationError, "t_final must be >= t_initial");
  if (terminal.extents() != ode.extents()) {
    throw Error(ErrorCode::ValidationError, "tensor extents differ from ODE");
  }
  const StepPlan plan = plan_steps(t_final - t_initial, dt);
  CoeffTensor p = terminal;

  auto fail = [](std::size_t step) {
    throw Error(ErrorCode::NonFinite,
                "coefficients became non-finite at RK4 step " + std::to_string(step) +
                    "; increase the cutoffs or reduce dt");
  };

  if (p.is_dense() && ode.has_matrix()) {
    std::span<double> y = p.dense_values();
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t s = 0; s < plan.total_steps(); ++s) {
      const double h = plan.step_size(s);
      ode.apply(y, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      ode.apply(tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      ode.apply(tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      ode.apply(tmp, k4);
      bool finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        finite &= std::isfinite(y[i]);
      }
      if (!finite) fail(s);
    }
  } else {
    for (std::size_t s = 0; s < plan.total_steps(); ++s) {
      const double h = plan.step_size(s);
      const CoeffTensor k1 = ode.apply(p);
      const CoeffTensor k2 = ode.apply(CoeffTensor(p).axpy(0.5 * h, k1));
      const CoeffTensor k3 = ode.apply(CoeffTensor(p).axpy(0.5 * h, k2));
      const CoeffTensor k4 = ode.apply(CoeffTensor(p).axpy(h, k3));
      p.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
      if (!p.all_finite()) fail(s);
    }
  }
  p.set_time(t_initial);
  return p;
}

KoopmanField::KoopmanField(const CoeffTensor& coeffs, const Polynomial& terminal_cost,
                           double lambda)
    : dim_(coeffs.rank() - 1),
      extents_(coeffs.extents()),
      terminal_cost_(terminal_cost),
      lambda_(lambda) {
  if (terminal_cost.num_vars() != dim_) {
    throw Error(ErrorCode::ValidationError, "terminal cost arity does not match tensor rank");
  }
  coeffs.for_each_nonzero([&](std::size_t flat, double v) {
    const MultiIndex idx = coeffs.multi_index(flat);
    indices_.insert(indices_.end(), idx.begin(), idx.end());
    values_.push_back(v);
  });
  for (std::size_t i = 0; i < dim_; ++i) cost_gradient_.push_back(terminal_cost.derivative(i));
}

double KoopmanField::psi(std::span<const double> x) const { return evaluate(x).psi; }

KoopmanField::Value KoopmanField::evaluate(std::span<const double> x) const {
  if (x.size() != dim_) throw Error(ErrorCode::ValidationError, "state dimension mismatch");
  const std::size_t rank = dim_ + 1;
  const double z = std::exp(-terminal_cost_(x) / lambda_);

  // powers[k][j] = x_k^j, slopes[k][j] = j x_k^(j−1); the last axis is z.
  std::vector<std::vector<double>> powers(rank), slopes(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const double v = k < dim_ ? x[k] : z;
    const auto m = static_cast<std::size_t>(extents_[k]);
    powers[k].assign(m, 1.0);
    slopes[k].assign(m, 0.0);
    for (std::size_t j = 1; j < m; ++j) {
      powers[k][j] = powers[k][j - 1] * v;
      slopes[k][j] = static_cast<double>(j) * powers[k][j - 1];
    }
  }

  Value out;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  double z_weighted = 0.0;  // Σ P n_z x^n z^{n_z}
  for (std::size_t e = 0; e < values_.size(); ++e) {
    const int* n = &indices_[e * rank];
    const double zp = powers[dim_][static_cast<std::size_t>(n[dim_])];
    double mono = values_[e] * zp;
    for (std::size_t k = 0; k < dim_; ++k) mono *= powers[k][static_cast<std::size_t>(n[k])];
    out.psi += mono;
    z_weighted += mono * n[dim_];
    for (std::size_t i = 0; i < dim_; ++i) {
      double g = values_[e] * zp * slopes[i][static_cast<std::size_t>(n[i])];
      if (g == 0.0) continue;
      for (std::size_t k = 0; k < dim_; ++k) {
        if (k != i) g *= powers[k][static_cast<std::size_t>(n[k])];
      }
      out.gradient[static_cast<Eigen::Index>(i)] += g;
    }
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    out.gradient[static_cast<Eigen::Index>(i)] -= z_weighted * cost_gradient_[i](x) / lambda_;
  }
  return out;
}

double eval_psi(const CoeffTensor& coeffs, std::span<const double> x,
                const Polynomial& terminal_cost, double lambda) {
  return KoopmanField(coeffs, terminal_cost, lambda).psi(x);
}

Eigen::VectorXd control_from_gradient(const ControlProblem& problem, double psi,
                                      const Eigen::VectorXd& gradient,
                                      std::span<const double> x) {
  if (!(psi > kPsiFloor)) {
    throw Error(ErrorCode::DesirabilityUnderflow,
                "psi = " + std::to_string(psi) + " at x = " + format_state(x) +
                    " is below the reliable floor");
  }
  return problem.feedback_gain() * gradient / psi;
}

Eigen::VectorXd eval_control(const CoeffTensor& coeffs, std::span<const double> x,
                             const ControlProblem& problem) {
  const KoopmanField field(coeffs, problem.terminal_cost(), problem.lambda());
  const KoopmanField::Value v = field.evaluate(x);
  return control_from_gradient(problem, v.psi, v.gradient, x);
}

CoeffTensor solve_koopman(const ControlProblem& problem, std::vector<int> extents, double dt) {
  const ExtendedGenerator ext = ito_extend(problem);
  const CoeffOde ode = CoeffOde::compile(ext.generator, ext.g_term, extents);
  const CoeffTensor terminal = CoeffTensor::terminal(std::move(extents), problem.t_final());
  return integrate_backward(ode, terminal, problem.t_final(), problem.t_initial(), dt);
}

CoeffTensor solve_koopman(const ControlProblem& problem, int x_cutoff, double dt) {
  std::vector<int> extents(problem.dim(), x_cutoff);
  extents.push_back(2);
  return solve_koopman(problem, std::move(extents), dt);
}

}  // namespace koopctl
