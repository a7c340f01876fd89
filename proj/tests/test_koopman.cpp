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
#include <random>

#include "koopctl/error.hpp"
#include "koopctl/koopman.hpp"
#include "koopctl/poly_operator.hpp"
#include "support.hpp"

using namespace koopctl;

namespace {

CoeffOde scalar_ode(const PolyOperator& op, int cutoff) {
  return CoeffOde::compile(op, PolyOperator(2), {cutoff, 2});
}

const std::vector<std::vector<double>> kProbes{{0, 0},     {0.5, 0},   {-0.5, 0}, {1, 0},
                                               {-1, 0},    {0, 0.5},   {0, -0.5}, {0.5, 0.5},
                                               {-0.5, -0.5}, {1, 1}};

}  // namespace

TEST_SUITE("koopman") {

TEST_CASE("shift rule for multiplication by x") {
  PolyOperator op(2);
  op.add_term(1.0, {1, 0}, {0, 0});
  const CoeffOde ode = scalar_ode(op, 6);
  std::mt19937_64 rng(4);
  const CoeffTensor p = testing::random_tensor({6, 2}, rng);
  const CoeffTensor out = ode.apply(p);
  for (int n = 0; n < 6; ++n) {
    for (int z = 0; z < 2; ++z) {
      const int t[2] = {n, z};
      const int s[2] = {n - 1, z};
      CHECK(out.at(t) == (n == 0 ? 0.0 : p.at(s)));
    }
  }
}

TEST_CASE("shift rule for differentiation") {
  PolyOperator op(2);
  op.add_term(1.0, {0, 0}, {1, 0});
  const CoeffOde ode = scalar_ode(op, 6);
  std::mt19937_64 rng(5);
  const CoeffTensor p = testing::random_tensor({6, 2}, rng);
  const CoeffTensor out = ode.apply(p);
  for (int n = 0; n < 6; ++n) {
    const int t[2] = {n, 1};
    const int s[2] = {n + 1, 1};
    CHECK(out.at(t) == (n == 5 ? 0.0 : (n + 1) * p.at(s)));
  }
}

TEST_CASE("stencil reproduces the applied operator on polynomials") {
  // Acting on a polynomial that fits inside the lattice, the stencil must
  // equal apply_operator wherever the result also fits.
  const ControlProblem prob = van_der_pol_problem();
  const ExtendedGenerator ext = ito_extend(prob);
  const std::vector<int> extents{12, 12, 3};
  const CoeffOde ode = CoeffOde::compile(ext.generator, ext.g_term, extents);
  Polynomial f = Polynomial::parse("1 + x1*z - 2*x2^3*z + 0.5*x1^2*x2*z^2", 2, true);
  CoeffTensor p(extents);
  for (const auto& [e, c] : f.terms()) p.set(e, c);
  const CoeffTensor out = ode.apply(p);
  const Polynomial expected = apply_operator(ext.generator + ext.g_term, f);
  for (const auto& [e, c] : expected.terms()) CHECK(out.at(e) == doctest::Approx(c));
  CHECK(out.nonzero_count() == expected.terms().size());
}

TEST_CASE("compiled stencil equals the hand-coded oscillator right-hand side") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.3, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    testing::OscillatorParams q;
    q.epsilon = u(rng);
    q.b22 = u(rng);
    q.lambda = u(rng);
    q.sigma1 = u(rng);
    q.sigma2 = u(rng);
    q.c1 = u(rng) - 0.9;
    q.c2 = u(rng) - 0.9;
    const ControlProblem prob = testing::oscillator_problem(q);
    const ExtendedGenerator ext = ito_extend(prob);
    const std::vector<int> extents{13, 11, 3};
    const CoeffOde ode = CoeffOde::compile(ext.generator, ext.g_term, extents);
    for (int k = 0; k < 5; ++k) {
      const CoeffTensor p = testing::random_tensor(extents, rng);
      const double diff = ode.apply(p).max_abs_diff(testing::oscillator_rhs_by_hand(p, q));
      CHECK(diff < 1e-11);
    }
  }
}

TEST_CASE("dense and sparse application agree") {
  const ControlProblem prob = van_der_pol_problem();
  const ExtendedGenerator ext = ito_extend(prob);
  const std::vector<int> extents{10, 9, 2};
  const CoeffOde ode = CoeffOde::compile(ext.generator, ext.g_term, extents);
  std::mt19937_64 rng(6);
  const CoeffTensor d = testing::random_tensor(extents, rng, Storage::Dense);
  CoeffTensor s(extents, 0.0, Storage::Sparse);
  d.for_each_nonzero([&](std::size_t f, double v) { s.set_flat(f, v); });
  CHECK(ode.apply(d).max_abs_diff(ode.apply(s)) < 1e-12);

  const CoeffTensor td = CoeffTensor::terminal(extents, 0.1, Storage::Dense);
  const CoeffTensor ts = CoeffTensor::terminal(extents, 0.1, Storage::Sparse);
  const CoeffTensor rd = integrate_backward(ode, td, 0.1, 0.0, 1e-3);
  const CoeffTensor rs = integrate_backward(ode, ts, 0.1, 0.0, 1e-3);
  CHECK(rd.max_abs_diff(rs) < 1e-10);
}

TEST_CASE("stencil application is linear") {
  const ControlProblem prob = van_der_pol_problem();
  const ExtendedGenerator ext = ito_extend(prob);
  const std::vector<int> extents{20, 20, 2};
  const CoeffOde ode = CoeffOde::compile(ext.generator, ext.g_term, extents);
  std::mt19937_64 rng(8);
  const CoeffTensor a = testing::random_tensor(extents, rng);
  const CoeffTensor b = testing::random_tensor(extents, rng);
  CoeffTensor combo = a;
  combo.scale(1.5).axpy(-0.25, b);
  CoeffTensor expected = ode.apply(a);
  expected.scale(1.5).axpy(-0.25, ode.apply(b));
  CHECK(ode.apply(combo).max_abs_diff(expected) < 1e-10);

  CoeffTensor ta = a, tb = b, tc = combo;
  ta.set_time(0.1);
  tb.set_time(0.1);
  tc.set_time(0.1);
  CoeffTensor lin = integrate_backward(ode, ta, 0.1, 0.0, 1e-3);
  lin.scale(1.5).axpy(-0.25, integrate_backward(ode, tb, 0.1, 0.0, 1e-3));
  const CoeffTensor direct = integrate_backward(ode, tc, 0.1, 0.0, 1e-3);
  double scale = 0.0;
  direct.for_each_nonzero([&](std::size_t, double v) { scale = std::max(scale, std::abs(v)); });
  CHECK(direct.max_abs_diff(lin) <= 1e-10 * std::max(1.0, scale));
}

TEST_CASE("z levels never mix") {
  const ControlProblem prob = van_der_pol_problem();
  const ExtendedGenerator ext = ito_extend(prob);
  for (const auto& t : (ext.generator + ext.g_term).terms()) CHECK(t.powers[2] == t.derivs[2]);
  const CoeffTensor p = solve_koopman(prob, 20, 1e-3);
  p.for_each_nonzero([&](std::size_t f, double) { CHECK(p.multi_index(f)[2] == 1); });
}

TEST_CASE("cutoffs smaller than a shift are rejected") {
  const ExtendedGenerator ext = ito_extend(van_der_pol_problem());
  try {
    (void)CoeffOde::compile(ext.generator, ext.g_term, {2, 2, 2});
    FAIL("expected CutoffTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CutoffTooSmall);
  }
}

TEST_CASE("constant running cost decays exponentially") {
  const double c = 3.0;
  ProblemSpec spec;
  spec.drift = {Polynomial(1)};
  spec.diffusion = Eigen::MatrixXd::Zero(1, 1);
  spec.control_map = Eigen::MatrixXd::Zero(1, 1);
  spec.control_weight = Eigen::MatrixXd::Identity(1, 1);
  spec.terminal_cost = Polynomial::parse("x1^2", 1);
  spec.running_cost = Polynomial::constant(1, c * 0.5);
  spec.t_final = 0.1;
  spec.lambda = 0.5;
  const ControlProblem prob = ControlProblem::create(spec);
  const CoeffTensor p = solve_koopman(prob, 8, 1e-3);
  const int idx[2] = {0, 1};
  CHECK(std::abs(p.at(idx) - std::exp(-c * 0.1)) < 1e-10);
  CHECK(p.nonzero_count() == 1);
}

TEST_CASE("zero operator returns the terminal tensor") {
  const CoeffOde ode = CoeffOde::compile(PolyOperator(3), PolyOperator(3), {5, 5, 2});
  std::mt19937_64 rng(9);
  CoeffTensor p = testing::random_tensor({5, 5, 2}, rng);
  p.set_time(1.0);
  const CoeffTensor out = integrate_backward(ode, p, 1.0, 0.0, 0.1);
  CHECK(out.max_abs_diff(p) == 0.0);
  CHECK(out.time() == 0.0);
}

TEST_CASE("integration rejects a mismatched terminal time") {
  const CoeffOde ode = CoeffOde::compile(PolyOperator(2), PolyOperator(2), {5, 2});
  const CoeffTensor p = CoeffTensor::terminal({5, 2}, 0.5);
  CHECK_THROWS_AS((void)integrate_backward(ode, p, 1.0, 0.0, 0.1), Error);
}

TEST_CASE("psi evaluation of simple coefficient sets") {
  const ControlProblem prob = van_der_pol_problem();
  const CoeffTensor terminal = CoeffTensor::terminal({8, 8, 2}, 0.1);
  for (const auto& x : kProbes) {
    const double expected = std::exp(-prob.terminal_cost()(x) / prob.lambda());
    CHECK(eval_psi(terminal, x, prob.terminal_cost(), prob.lambda()) ==
          doctest::Approx(expected).epsilon(1e-14));
  }
  CoeffTensor constant({8, 8, 2});
  const int zero[3] = {0, 0, 0};
  constant.set(zero, 0.7);
  for (const auto& x : kProbes) {
    CHECK(eval_psi(constant, x, prob.terminal_cost(), prob.lambda()) == doctest::Approx(0.7));
    CHECK(eval_control(constant, x, prob).norm() == 0.0);
  }
  const std::vector<double> center{1.0, 0.0};
  CHECK(eval_control(terminal, center, prob).norm() == doctest::Approx(0.0));
}

TEST_CASE("gradient matches finite differences of psi") {
  const ControlProblem prob = van_der_pol_problem();
  const CoeffTensor p = solve_koopman(prob, 30, 1e-3);
  const KoopmanField field(p, prob.terminal_cost(), prob.lambda());
  for (const auto& x : kProbes) {
    const auto v = field.evaluate(x);
    for (std::size_t i = 0; i < 2; ++i) {
      auto xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const double fd = (field.psi(xp) - field.psi(xm)) / 2e-6;
      CHECK(v.gradient[static_cast<Eigen::Index>(i)] ==
            doctest::Approx(fd).epsilon(1e-5).scale(std::abs(v.psi) * 1e-3));
    }
  }
}

TEST_CASE("control from an underflowing psi is an error") {
  const ControlProblem prob = van_der_pol_problem();
  const CoeffTensor terminal = CoeffTensor::terminal({8, 8, 2}, 0.1);
  const std::vector<double> far{-3.0, 3.0};
  try {
    (void)eval_control(terminal, far, prob);
    FAIL("expected DesirabilityUnderflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DesirabilityUnderflow);
  }
}

TEST_CASE("zero costs give psi = 1 and no control") {
  ProblemSpec spec;
  spec.drift = van_der_pol_drift(1.0);
  spec.diffusion = Eigen::MatrixXd::Zero(2, 2);
  spec.diffusion(1, 1) = 1.0;
  spec.control_map = spec.diffusion;
  spec.control_weight = Eigen::MatrixXd::Zero(2, 2);
  spec.control_weight(1, 1) = 0.25;
  spec.terminal_cost = Polynomial(2);
  spec.running_cost = Polynomial(2);
  spec.t_final = 0.1;
  const ControlProblem prob = ControlProblem::create(spec);
  const CoeffTensor p = solve_koopman(prob, 20, 1e-3);
  for (const auto& x : kProbes) {
    CHECK(eval_psi(p, x, prob.terminal_cost(), prob.lambda()) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eval_control(p, x, prob).norm() < 1e-14);
  }
}

TEST_CASE("RK4 step refinement is fourth order") {
  const ControlProblem prob = van_der_pol_problem();
  const double dts[3] = {0.004, 0.002, 0.001};
  std::vector<KoopmanField> fields;
  for (double dt : dts) fields.emplace_back(solve_koopman(prob, 16, dt), prob.terminal_cost(), prob.lambda());
  for (const auto& x : kProbes) {
    const double d1 = std::abs(fields[0].psi(x) - fields[1].psi(x));
    const double d2 = std::abs(fields[1].psi(x) - fields[2].psi(x));
    CAPTURE(x[0]);
    CAPTURE(x[1]);
    CHECK(d1 / d2 >= 8.0);
    CHECK(d1 / d2 <= 32.0);
  }
}

TEST_CASE("psi converges in the cutoff") {
  const ControlProblem prob = van_der_pol_problem();
  const KoopmanField f40(solve_koopman(prob, 40, 1e-4), prob.terminal_cost(), prob.lambda());
  const KoopmanField f60(solve_koopman(prob, 60, 1e-4), prob.terminal_cost(), prob.lambda());
  for (const auto& x : kProbes) {
    const double a = f40.psi(x);
    const double b = f60.psi(x);
    CHECK(std::abs(a - b) < 0.01 * std::abs(b));
  }
}

}
