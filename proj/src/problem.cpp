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

#include "koopctl/problem.hpp"

#include <cmath>
#include <string>

#include "koopctl/error.hpp"

namespace koopctl {
namespace {

struct ControlGeometry {
  Eigen::MatrixXd weighted;  // U R⁻¹ Uᵀ
  Eigen::MatrixXd gain;      // R⁻¹ Uᵀ, zero rows for undriven inputs
  std::vector<std::size_t> controlled;
};

ControlGeometry control_geometry(const Eigen::MatrixXd& control_map,
                                 const Eigen::MatrixXd& control_weight) {
  const Eigen::Index n_inp = control_map.cols();
  if (control_weight.rows() != n_inp || control_weight.cols() != n_inp) {
    throw Error(ErrorCode::ValidationError, "control weight R must be N_inp x N_inp");
  }
  if (n_inp > 0 && (control_weight - control_weight.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::ValidationError, "control weight R must be symmetric");
  }

  ControlGeometry geo;
  for (Eigen::Index j = 0; j < n_inp; ++j) {
    if (control_map.col(j).cwiseAbs().maxCoeff() > 0.0) {
      geo.controlled.push_back(static_cast<std::size_t>(j));
    }
  }
  const auto n_c = static_cast<Eigen::Index>(geo.controlled.size());
  geo.weighted = Eigen::MatrixXd::Zero(control_map.rows(), control_map.rows());
  geo.gain = Eigen::MatrixXd::Zero(n_inp, control_map.rows());
  if (n_c == 0) return geo;

  Eigen::MatrixXd r_c(n_c, n_c);
  Eigen::MatrixXd u_c(control_map.rows(), n_c);
  for (Eigen::Index a = 0; a < n_c; ++a) {
    u_c.col(a) = control_map.col(static_cast<Eigen::Index>(geo.controlled[a]));
    for (Eigen::Index b = 0; b < n_c; ++b) {
      r_c(a, b) = control_weight(static_cast<Eigen::Index>(geo.controlled[a]),
                                 static_cast<Eigen::Index>(geo.controlled[b]));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(r_c);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularWeight,
                "control weight R is not positive definite on the driven inputs");
  }
  const Eigen::MatrixXd r_inv_ut = llt.solve(u_c.transpose());
  geo.weighted = u_c * r_inv_ut;
  for (Eigen::Index a = 0; a < n_c; ++a) {
    geo.gain.row(static_cast<Eigen::Index>(geo.controlled[a])) = r_inv_ut.row(a);
  }
  return geo;
}

void check_noise_has_authority(const Eigen::MatrixXd& noise, const Eigen::MatrixXd& weighted) {
  for (Eigen::Index i = 0; i < noise.rows(); ++i) {
    const bool noisy = noise.row(i).cwiseAbs().maxCoeff() > 0.0;
    const bool driven = weighted.row(i).cwiseAbs().maxCoeff() > 0.0;
    if (noisy && !driven) {
      throw Error(ErrorCode::NoiseOnUncontrolled,
                  "coordinate x" + std::to_string(i + 1) +
                      " carries noise but no control authority; remove its noise "
                      "term from the control model");
    }
  }
}

double proportionality_residual(const Eigen::MatrixXd& noise, const Eigen::MatrixXd& weighted,
                                double lambda) {
  return (noise - lambda * weighted).cwiseAbs().maxCoeff();
}

double residual_tolerance(const Eigen::MatrixXd& noise) {
  return kLambdaTolerance * std::max(1.0, noise.cwiseAbs().maxCoeff());
}

}  // namespace

double compute_lambda(const Eigen::MatrixXd& diffusion, const Eigen::MatrixXd& control_map,
                      const Eigen::MatrixXd& control_weight) {
  if (diffusion.rows() != control_map.rows()) {
    throw Error(ErrorCode::ValidationError, "B and U must have the same row count");
  }
  const ControlGeometry geo = control_geometry(control_map, control_weight);
  const Eigen::MatrixXd noise = diffusion * diffusion.transpose();
  check_noise_has_authority(noise, geo.weighted);

  Eigen::Index k = 0;
  const double pivot = geo.weighted.diagonal().cwiseAbs().maxCoeff(&k);
  if (pivot == 0.0) {
    throw Error(ErrorCode::NotProportional,
                "U R^-1 U^T vanishes; lambda is undetermined");
  }
  const double lambda = noise(k, k) / geo.weighted(k, k);
  if (!(lambda > 0.0) || !std::isfinite(lambda) ||
      proportionality_residual(noise, geo.weighted, lambda) > residual_tolerance(noise)) {
    throw Error(ErrorCode::NotProportional,
                "B B^T is not a positive multiple of U R^-1 U^T");
  }
  return lambda;
}

Polynomial quadratic_cost(std::span<const double> centers, std::span<const double> widths) {
  if (centers.size() != widths.size()) {
    throw Error(ErrorCode::ValidationError, "cost centers and widths differ in length");
  }
  const std::size_t n = centers.size();
  Polynomial cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(widths[i] > 0.0) || !std::isfinite(widths[i]) || !std::isfinite(centers[i])) {
      throw Error(ErrorCode::ValidationError, "cost widths must be positive and finite");
    }
    const double w = 1.0 / (2.0 * widths[i] * widths[i]);
    Polynomial shifted = Polynomial::variable(n, i) - Polynomial::constant(n, centers[i]);
    cost += (shifted * shifted) * w;
  }
  return cost;
}

ControlProblem ControlProblem::create(ProblemSpec spec) {
  const std::size_t n = spec.drift.size();
  if (n == 0) throw Error(ErrorCode::ValidationError, "problem dimension must be >= 1");
  for (const auto& a : spec.drift) {
    if (a.num_vars() != n) throw Error(ErrorCode::ValidationError, "drift arity must equal N");
    if (!a.all_finite()) throw Error(ErrorCode::ValidationError, "drift has non-finite coefficients");
  }
  const auto rows = static_cast<Eigen::Index>(n);
  if (spec.diffusion.rows() != rows || spec.control_map.rows() != rows) {
    throw Error(ErrorCode::ValidationError, "B and U must have N rows");
  }
  if (!spec.diffusion.allFinite() || !spec.control_map.allFinite() ||
      !spec.control_weight.allFinite()) {
    throw Error(ErrorCode::ValidationError, "B, U, R must be finite");
  }
  for (const Polynomial* c : {&spec.terminal_cost, &spec.running_cost}) {
    if (c->num_vars() != n) throw Error(ErrorCode::ValidationError, "cost arity must equal N");
    if (!c->all_finite()) throw Error(ErrorCode::ValidationError, "cost has non-finite coefficients");
  }
  if (!std::isfinite(spec.t_initial) || !std::isfinite(spec.t_final) ||
      !(spec.t_final > spec.t_initial)) {
    throw Error(ErrorCode::ValidationError, "horizon requires t_final > t_initial");
  }

  const ControlGeometry geo = control_geometry(spec.control_map, spec.control_weight);
  const Eigen::MatrixXd noise = spec.diffusion * spec.diffusion.transpose();
  if (spec.lambda) {
    const double lambda = *spec.lambda;
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorCode::ValidationError, "lambda must be positive");
    }
    check_noise_has_authority(noise, geo.weighted);
    if (proportionality_residual(noise, geo.weighted, lambda) > residual_tolerance(noise)) {
      throw Error(ErrorCode::ValidationError,
                  "B B^T != lambda U R^-1 U^T for the supplied lambda");
    }
  } else {
    spec.lambda = compute_lambda(spec.diffusion, spec.control_map, spec.control_weight);
  }

  ControlProblem problem(std::move(spec));
  problem.gain_ = problem.lambda() * geo.gain;
  problem.controlled_ = geo.controlled;
  return problem;
}

Plant ControlProblem::plant() const {
  return Plant{spec_.drift, spec_.diffusion, spec_.control_map};
}

std::vector<Polynomial> van_der_pol_drift(double epsilon) {
  const Polynomial x1 = Polynomial::variable(2, 0);
  const Polynomial x2 = Polynomial::variable(2, 1);
  const Polynomial one = Polynomial::constant(2, 1.0);
  return {x2, epsilon * ((one - x1 * x1) * x2) - x1};
}

ControlProblem van_der_pol_problem(const VanDerPolParams& params) {
  ProblemSpec spec;
  spec.drift = van_der_pol_drift(params.epsilon);
  spec.diffusion = Eigen::MatrixXd::Zero(2, 2);
  spec.diffusion(1, 1) = params.b22;
  spec.control_map = Eigen::MatrixXd::Zero(2, 2);
  spec.control_map(1, 1) = params.u22;
  spec.control_weight = Eigen::MatrixXd::Zero(2, 2);
  spec.control_weight(1, 1) = params.r22;
  const double centers[] = {params.center1, params.center2};
  const double widths[] = {params.sigma1, params.sigma2};
  spec.terminal_cost = quadratic_cost(centers, widths);
  spec.running_cost = spec.terminal_cost;
  spec.t_initial = params.t_initial;
  spec.t_final = params.t_final;
  return ControlProblem::create(std::move(spec));
}

Plant van_der_pol_plant(const VanDerPolParams& params) {
  Plant plant;
  plant.drift = van_der_pol_drift(params.epsilon);
  plant.diffusion = Eigen::MatrixXd::Zero(2, 2);
  plant.diffusion(0, 0) = params.b11;
  plant.diffusion(1, 1) = params.b22;
  plant.control_map = Eigen::MatrixXd::Zero(2, 2);
  plant.control_map(1, 1) = params.u22;
  return plant;
}

}  // namespace koopctl
