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

#include <doctest.h>

#include <cmath>

#include "koopctl/hjb_fd.hpp"
#include "koopctl/koopman.hpp"
#include "koopctl/path_integral.hpp"

using namespace koopctl;

namespace {

// Oscillator solutions at the reference resolution, computed once.
struct Reference {
  ControlProblem problem = van_der_pol_problem();
  CoeffTensor coeffs = solve_koopman(problem, 60, 1e-4);
  KoopmanField koopman{coeffs, problem.terminal_cost(), problem.lambda()};
  PsiField fd = [this] {
    FdOptions o;
    o.substeps = 4;
    return solve_hjb(problem, Grid::uniform({{-2, 2}, {-2, 2}}, 0.01), 1e-4, o);
  }();
};

const Reference& reference() {
  static const Reference r;
  return r;
}

}  // namespace

TEST_SUITE("cross_solver") {

TEST_CASE("koopman and fd psi agree along x2 = 0") {
  const Reference& r = reference();
  for (int i = 0; i <= 300; ++i) {
    const std::vector<double> x{-1.5 + 0.01 * i, 0.0};
    const double a = r.koopman.psi(x);
    const double b = r.fd.interpolate(x);
    CAPTURE(x[0]);
    CHECK(std::abs(a - b) <= 0.05 * b);
  }
}

TEST_CASE("koopman and fd controls agree at the origin") {
  const Reference& r = reference();
  const std::vector<double> origin{0.0, 0.0};
  const Eigen::VectorXd uk = eval_control(r.coeffs, origin, r.problem);
  const Eigen::VectorXd uf = fd_control(r.fd, origin, r.problem);
  CHECK(std::isfinite(uk[1]));
  CHECK(std::abs(uk[1] - uf[1]) <= 0.1 * std::abs(uf[1]));
  CHECK(uk[0] == 0.0);
}

TEST_CASE("path integral agrees with fd at the origin") {
  const Reference& r = reference();
  const std::vector<double> origin{0.0, 0.0};
  const FkEstimate est = feynman_kac_psi(r.problem, origin, 0.0, 100000, RngStream(20260101));
  const double fd = r.fd.interpolate(origin);
  CAPTURE(est.mean);
  CAPTURE(est.std_error);
  CAPTURE(fd);
  CHECK(std::abs(est.mean - fd) <= 3.0 * est.std_error);
}

}
