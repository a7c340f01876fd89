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

#include "koopctl/control_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "koopctl/error.hpp"
#include "koopctl/path_integral.hpp"
#include "koopctl/time_steps.hpp"

namespace koopctl {

ClampBox ClampBox::symmetric(std::size_t dim, double bound) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Eigen::VectorXd::Constant(n, -bound), Eigen::VectorXd::Constant(n, bound)};
}

Eigen::VectorXd clamp_state(std::span<const double> x, const ClampBox& box) {
  if (static_cast<Eigen::Index>(x.size()) != box.lower.size()) {
    throw Error(ErrorCode::ValidationError, "clamp box dimension mismatch");
  }
  Eigen::VectorXd out(box.lower.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(x[static_cast<std::size_t>(i)], box.lower[i], box.upper[i]);
  }
  return out;
}

Controller::Controller(ControllerKind kind, const ControlProblem& problem, ClampBox box)
    : kind_(kind), problem_(std::make_shared<const ControlProblem>(problem)), box_(std::move(box)) {
  const auto n = static_cast<Eigen::Index>(problem.dim());
  if (box_.lower.size() != n || box_.upper.size() != n || !box_.lower.allFinite() ||
      !box_.upper.allFinite() || (box_.upper - box_.lower).minCoeff() < 0.0) {
    throw Error(ErrorCode::ValidationError, "clamp box must be finite with lower <= upper");
  }
}

Controller Controller::koopman(const CoeffTensor& coeffs, const ControlProblem& problem,
                               ClampBox box) {
  Controller c(ControllerKind::Koopman, problem, std::move(box));
  c.koopman_ = std::make_shared<const KoopmanField>(coeffs, problem.terminal_cost(), problem.lambda());
  return c;
}

Controller Controller::finite_difference(PsiField field, const ControlProblem& problem,
                                         ClampBox box) {
  Controller c(ControllerKind::FiniteDifference, problem, std::move(box));
  c.field_ = std::make_shared<const PsiField>(std::move(field));
  return c;
}

Controller Controller::zero(const ControlProblem& problem, ClampBox box) {
  return Controller(ControllerKind::Zero, problem, std::move(box));
}

Eigen::VectorXd Controller::evaluate(std::span<const double> x) const {
  const Eigen::VectorXd xc = clamp_state(x, box_);
  const std::span<const double> view(xc.data(), static_cast<std::size_t>(xc.size()));
  switch (kind_) {
    case ControllerKind::Koopman: {
      const KoopmanField::Value v = koopman_->evaluate(view);
      return control_from_gradient(*problem_, v.psi, v.gradient, view);
    }
    case ControllerKind::FiniteDifference:
      return fd_control(*field_, view, *problem_);
    case ControllerKind::Zero:
      break;
  }
  return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem_->input_dim()));
}

Trajectory closed_loop_run(const Plant& plant, const Controller& controller,
                           const Eigen::VectorXd& x0, double duration, double dt,
                           std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(plant.dim());
  if (x0.size() != n || plant.diffusion.rows() != n || plant.control_map.rows() != n ||
      static_cast<std::size_t>(n) != controller.problem().dim()) {
    throw Error(ErrorCode::ValidationError, "plant, controller and state dimensions differ");
  }
  if (static_cast<std::size_t>(plant.control_map.cols()) != controller.problem().input_dim()) {
    throw Error(ErrorCode::ValidationError, "plant and controller input dimensions differ");
  }
  const StepPlan plan = plan_steps(duration, dt);
  std::vector<CompiledPolynomial> a(plant.drift.begin(), plant.drift.end());
  RngStream rng(seed);

  Trajectory traj;
  traj.seed = seed;
  traj.times.reserve(plan.total_steps() + 1);
  traj.states.reserve(plan.total_steps() + 1);
  traj.controls.reserve(plan.total_steps());
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd xi(plant.diffusion.cols());
  Eigen::VectorXd rate(n);
  const auto n_inp = static_cast<Eigen::Index>(controller.problem().input_dim());
  for (std::size_t k = 0; k < plan.total_steps(); ++k) {
    const double h = plan.step_size(k);
    Eigen::VectorXd u;
    try {
      u = controller.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DesirabilityUnderflow) throw;
      if (traj.underflow_steps++ == 0) traj.first_underflow = e.what();
      u = Eigen::VectorXd::Zero(n_inp);
    }
    for (Eigen::Index i = 0; i < n; ++i) rate[i] = a[static_cast<std::size_t>(i)](x.data());
    rate += plant.control_map * u;
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = rng.normal();
    x += rate * h + plant.diffusion * xi * std::sqrt(h);
    if (!x.allFinite()) {
      throw Error(ErrorCode::NonFinite, "closed-loop state diverged at step " + std::to_string(k));
    }
    traj.controls.push_back(std::move(u));
    traj.times.push_back(k + 1 == plan.total_steps()
                             ? duration
                             : static_cast<double>(k + 1) * dt);
    traj.states.push_back(x);
  }
  return traj;
}

Eigen::VectorXd mean_abs_deviation(const Trajectory& trajectory, const Eigen::VectorXd& target,
                                   double t_from, double t_to) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(target.size());
  std::size_t count = 0;
  for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
    const double t = trajectory.times[k];
    if (t < t_from || t > t_to) continue;
    sum += (trajectory.states[k] - target).cwiseAbs();
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::ValidationError, "no samples in the requested window");
  return sum / static_cast<double>(count);
}

void write_csv(std::ostream& os, const Trajectory& trajectory,
               std::span<const std::size_t> inputs, std::size_t stride,
               std::string_view provenance) {
  if (stride == 0) throw Error(ErrorCode::ValidationError, "stride must be >= 1");
  if (!provenance.empty()) {
    std::istringstream lines{std::string(provenance)};
    for (std::string line; std::getline(lines, line);) os << "# " << line << '\n';
  }
  const std::size_t n = trajectory.states.empty() ? 0 : static_cast<std::size_t>(trajectory.states[0].size());
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",x" << (i + 1);
  for (std::size_t j : inputs) os << ",u" << (j + 1);
  os << '\n';
  char buf[64];
  for (std::size_t k = 0; k < trajectory.times.size(); k += stride) {
    std::snprintf(buf, sizeof buf, "%.10g", trajectory.times[k]);
    os << buf;
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", trajectory.states[k][static_cast<Eigen::Index>(i)]);
      os << buf;
    }
    for (std::size_t j : inputs) {
      if (k < trajectory.controls.size()) {
        std::snprintf(buf, sizeof buf, ",%.17g", trajectory.controls[k][static_cast<Eigen::Index>(j)]);
        os << buf;
      } else {
        os << ',';
      }
    }
    os << '\n';
  }
}

}  // namespace koopctl
