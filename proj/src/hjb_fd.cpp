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

#include "koopctl/hjb_fd.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl/koopman.hpp"
#include "koopctl/time_steps.hpp"

namespace koopctl {
namespace {

constexpr std::size_t kMaxDim = 3;
constexpr double kBlowUp = 1e12;

}  // namespace

Grid Grid::uniform(const std::vector<std::pair<double, double>>& bounds, double spacing) {
  return uniform(bounds, std::vector<double>(bounds.size(), spacing));
}

Grid Grid::uniform(const std::vector<std::pair<double, double>>& bounds,
                   const std::vector<double>& spacings) {
  if (bounds.empty() || bounds.size() > kMaxDim || spacings.size() != bounds.size()) {
    throw Error(ErrorCode::ValidationError, "grids support 1 to 3 dimensions");
  }
  Grid g;
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const auto [lo, hi] = bounds[k];
    const double h = spacings[k];
    if (!(h > 0.0) || !(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw Error(ErrorCode::ValidationError, "grid needs max > min and spacing > 0");
    }
    const double cells = (hi - lo) / h;
    const double n = std::round(cells);
    if (std::fabs(cells - n) > 1e-9 * std::max(1.0, n)) {
      throw Error(ErrorCode::ValidationError, "grid extent is not a multiple of the spacing");
    }
    g.axes_.push_back({lo, hi, h, static_cast<int>(n) + 1});
  }
  g.strides_.assign(g.axes_.size(), 1);
  g.size_ = 1;
  for (std::size_t k = g.axes_.size(); k-- > 0;) {
    g.strides_[k] = g.size_;
    g.size_ *= static_cast<std::size_t>(g.axes_[k].count);
  }
  return g;
}

std::vector<int> Grid::multi_index(std::size_t flat) const {
  std::vector<int> idx(axes_.size());
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    idx[k] = static_cast<int>(flat / strides_[k]);
    flat %= strides_[k];
  }
  return idx;
}

std::size_t Grid::flat_index(std::span<const int> index) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    flat += static_cast<std::size_t>(index[k]) * strides_[k];
  }
  return flat;
}

std::vector<double> Grid::point(std::size_t flat) const {
  const std::vector<int> idx = multi_index(flat);
  std::vector<double> x(axes_.size());
  for (std::size_t k = 0; k < axes_.size(); ++k) x[k] = axes_[k].coordinate(idx[k]);
  return x;
}

double PsiField::interpolate(std::span<const double> x) const {
  const std::size_t n = grid.dim();
  if (x.size() != n) throw Error(ErrorCode::ValidationError, "state dimension mismatch");
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (std::size_t k = 0; k < n; ++k) {
    const GridAxis& a = grid.axis(k);
    if (!(x[k] >= a.min && x[k] <= a.max)) {
      throw Error(ErrorCode::OutOfDomain, "interpolation point outside the grid");
    }
    const double s = (x[k] - a.min) / a.spacing;
    base[k] = std::min(static_cast<int>(std::floor(s)), std::max(a.count - 2, 0));
    frac[k] = a.count > 1 ? s - base[k] : 0.0;
  }
  double sum = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    std::array<int, kMaxDim> idx{};
    for (std::size_t k = 0; k < n; ++k) {
      const bool up = (corner >> k) & 1U;
      idx[k] = base[k] + (up ? 1 : 0);
      w *= up ? frac[k] : 1.0 - frac[k];
    }
    if (w == 0.0) continue;
    sum += w * values[grid.flat_index(std::span<const int>(idx.data(), n))];
  }
  return sum;
}

PsiField terminal_field(const ControlProblem& problem, const Grid& grid) {
  if (grid.dim() != problem.dim()) throw Error(ErrorCode::ValidationError, "grid dimension mismatch");
  PsiField field{grid, std::vector<double>(grid.size()), problem.t_final()};
  const CompiledPolynomial phi(problem.terminal_cost());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const std::vector<double> x = grid.point(p);
    field.values[p] = std::exp(-phi(x.data()) / problem.lambda());
  }
  return field;
}

PsiField solve_hjb(const ControlProblem& problem, const Grid& grid, double dt,
                   const FdOptions& options) {
  const std::size_t n = problem.dim();
  if (grid.dim() != n) throw Error(ErrorCode::ValidationError, "grid dimension mismatch");
  if (options.substeps < 1) throw Error(ErrorCode::ValidationError, "substeps must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::ValidationError, "dt must be positive");

  const Eigen::MatrixXd s = problem.diffusion() * problem.diffusion().transpose();
  const double s_max = s.cwiseAbs().maxCoeff();
  double h_min = grid.axis(0).spacing;
  for (std::size_t k = 1; k < n; ++k) h_min = std::min(h_min, grid.axis(k).spacing);
  const double dt_sub = dt / options.substeps;
  if (s_max > 0.0 && dt_sub > options.cfl * h_min * h_min / s_max) {
    std::ostringstream msg;
    msg << "explicit step " << dt_sub << " exceeds the stability bound "
        << options.cfl * h_min * h_min / s_max << "; raise substeps or coarsen dt";
    throw Error(ErrorCode::StabilityViolation, msg.str());
  }

  const std::size_t size = grid.size();
  std::vector<std::vector<double>> drift(n, std::vector<double>(size));
  std::vector<double> g(size);
  {
    std::vector<CompiledPolynomial> a;
    for (const auto& p : problem.drift()) a.emplace_back(p);
    const CompiledPolynomial v(problem.running_cost());
    for (std::size_t p = 0; p < size; ++p) {
      const std::vector<double> x = grid.point(p);
      for (std::size_t k = 0; k < n; ++k) drift[k][p] = a[k](x.data());
      g[p] = -v(x.data()) / problem.lambda();
    }
  }

  std::array<double, kMaxDim> h{}, inv2h{}, invh{}, invh2{};
  std::array<int, kMaxDim> count{};
  std::array<std::size_t, kMaxDim> stride{};
  std::array<double, kMaxDim> half_diag{};
  for (std::size_t k = 0; k < n; ++k) {
    h[k] = grid.axis(k).spacing;
    invh[k] = 1.0 / h[k];
    inv2h[k] = 0.5 / h[k];
    invh2[k] = 1.0 / (h[k] * h[k]);
    count[k] = grid.axis(k).count;
    stride[k] = grid.strides()[k];
    half_diag[k] = 0.5 * s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  }
  struct Mixed {
    std::size_t k, l;
    double coef;
  };
  std::vector<Mixed> mixed;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) {
      const double c = s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
      if (c != 0.0) mixed.push_back({k, l, c * 0.25 / (h[k] * h[l])});
    }
  }

  PsiField field = terminal_field(problem, grid);
  std::vector<double> next(size);
  const StepPlan plan = plan_steps(problem.horizon(), dt);

  for (std::size_t step = 0; step < plan.total_steps(); ++step) {
    const double tau = plan.step_size(step) / options.substeps;
    for (int sub = 0; sub < options.substeps; ++sub) {
      const std::vector<double>& psi = field.values;
      std::array<int, kMaxDim> idx{};
      bool unstable = false;
      for (std::size_t p = 0; p < size; ++p) {
        const double c = psi[p];
        double rate = g[p] * c;
        bool interior = true;
        for (std::size_t k = 0; k < n; ++k) {
          if (count[k] == 1) continue;
          const double a = drift[k][p];
          if (idx[k] == 0) {
            interior = false;
            if (a > 0.0) rate += a * (psi[p + stride[k]] - c) * invh[k];
          } else if (idx[k] == count[k] - 1) {
            interior = false;
            if (a < 0.0) rate += a * (c - psi[p - stride[k]]) * invh[k];
          } else {
            const double up = psi[p + stride[k]];
            const double down = psi[p - stride[k]];
            rate += a * (up - down) * inv2h[k];
            rate += half_diag[k] * (up - 2.0 * c + down) * invh2[k];
          }
        }
        if (interior) {
          for (const Mixed& m : mixed) {
            const std::size_t sk = stride[m.k], sl = stride[m.l];
            rate += m.coef * (psi[p + sk + sl] - psi[p + sk - sl] - psi[p - sk + sl] +
                              psi[p - sk - sl]);
          }
        }
        const double v = c + tau * rate;
        next[p] = v;
        unstable |= !(std::fabs(v) <= kBlowUp);

        for (std::size_t k = n; k-- > 0;) {
          if (++idx[k] < count[k]) break;
          idx[k] = 0;
        }
      }
      if (unstable) {
        throw Error(ErrorCode::Unstable,
                    "psi diverged during explicit step " + std::to_string(step));
      }
      field.values.swap(next);
    }
  }
  field.time = problem.t_initial();
  return field;
}

std::pair<double, Eigen::VectorXd> fd_psi_gradient(const PsiField& field,
                                                   std::span<const double> x) {
  const Grid& grid = field.grid;
  const std::size_t n = grid.dim();
  if (x.size() != n) throw Error(ErrorCode::ValidationError, "state dimension mismatch");
  std::array<int, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (std::size_t k = 0; k < n; ++k) {
    const GridAxis& a = grid.axis(k);
    if (!(x[k] >= a.min + a.spacing && x[k] <= a.max - a.spacing) || a.count < 4) {
      throw Error(ErrorCode::OutOfDomain, "state is not one cell inside the grid");
    }
    const double s = (x[k] - a.min) / a.spacing;
    base[k] = std::clamp(static_cast<int>(std::floor(s)), 1, a.count - 3);
    frac[k] = s - base[k];
  }
  double psi = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    std::array<int, kMaxDim> idx{};
    for (std::size_t k = 0; k < n; ++k) {
      const bool up = (corner >> k) & 1U;
      idx[k] = base[k] + (up ? 1 : 0);
      w *= up ? frac[k] : 1.0 - frac[k];
    }
    if (w == 0.0) continue;
    const std::size_t p = grid.flat_index(std::span<const int>(idx.data(), n));
    psi += w * field.values[p];
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t st = grid.strides()[k];
      grad[static_cast<Eigen::Index>(k)] +=
          w * (field.values[p + st] - field.values[p - st]) / (2.0 * grid.axis(k).spacing);
    }
  }
  return {psi, grad};
}

Eigen::VectorXd fd_control(const PsiField& field, std::span<const double> x,
                           const ControlProblem& problem) {
  const auto [psi, grad] = fd_psi_gradient(field, x);
  return control_from_gradient(problem, psi, grad, x);
}

void write_csv(std::ostream& os, const PsiField& field, std::string_view provenance) {
  if (!provenance.empty()) {
    std::istringstream lines{std::string(provenance)};
    for (std::string line; std::getline(lines, line);) os << "# " << line << '\n';
  }
  const std::size_t n = field.grid.dim();
  for (std::size_t k = 0; k < n; ++k) os << 'x' << (k + 1) << ',';
  os << "psi\n";
  char buf[64];
  for (std::size_t p = 0; p < field.grid.size(); ++p) {
    for (double c : field.grid.point(p)) {
      std::snprintf(buf, sizeof buf, "%.10g,", c);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", field.values[p]);
    os << buf << '\n';
  }
}

}  // namespace koopctl
