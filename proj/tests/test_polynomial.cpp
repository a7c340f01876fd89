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

#include <random>

#include "koopctl/error.hpp"
#include "koopctl/polynomial.hpp"

using namespace koopctl;

namespace {

Polynomial random_poly(std::mt19937_64& rng, std::size_t nv, int max_degree, int terms) {
  std::uniform_int_distribution<int> e(0, max_degree);
  std::uniform_int_distribution<int> c(-8, 8);
  Polynomial p(nv);
  for (int t = 0; t < terms; ++t) {
    Exponents ex(nv);
    for (auto& v : ex) v = e(rng);
    p.add_term(ex, c(rng) / 4.0);
  }
  return p;
}

}  // namespace

TEST_SUITE("polynomial") {

TEST_CASE("parse reads signed sums of monomials") {
  const Polynomial p = Polynomial::parse("x2 - 1.5*x1^2*x2 + 0.25", 2);
  CHECK(p.coefficient({0, 1}) == 1.0);
  CHECK(p.coefficient({2, 1}) == -1.5);
  CHECK(p.coefficient({0, 0}) == 0.25);
  CHECK(p.terms().size() == 3);
  CHECK(p.degree() == 3);
  CHECK(p.degree_in(0) == 2);
}

TEST_CASE("parse merges repeated monomials and drops cancellations") {
  const Polynomial p = Polynomial::parse("x1*x1 + 2*x1^2 - 3*x1^2 + x2", 2);
  CHECK(p == Polynomial::parse("x2", 2));
}

TEST_CASE("parse accepts z only when allowed") {
  const Polynomial p = Polynomial::parse("2*z*x1", 1, true);
  CHECK(p.coefficient({1, 1}) == 2.0);
  CHECK_THROWS_AS(Polynomial::parse("z", 1), Error);
}

TEST_CASE("parse errors carry the column") {
  for (const char* bad : {"x3", "x1^", "2**x1", "x1 +", "", "x0", "1e999"}) {
    CAPTURE(bad);
    try {
      (void)Polynomial::parse(bad, 2);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
  }
  try {
    (void)Polynomial::parse("x1 + x9", 2);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("column") != std::string::npos);
  }
}

TEST_CASE("to_string round-trips through parse") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Polynomial p = random_poly(rng, 3, 4, 6);
    p *= 1.0 / 3.0;
    CHECK(Polynomial::parse(p.to_string(), 3) == p);
  }
  CHECK(Polynomial(2).to_string() == "0");
  CHECK(Polynomial::parse("0", 2).is_zero());
}

TEST_CASE("evaluation and compiled evaluation agree") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 30; ++i) {
    const Polynomial p = random_poly(rng, 2, 5, 8);
    const CompiledPolynomial cp(p);
    const double x[2] = {u(rng), u(rng)};
    double expected = 0.0;
    for (const auto& [ex, c] : p.terms()) expected += c * std::pow(x[0], ex[0]) * std::pow(x[1], ex[1]);
    CHECK(p(x) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(cp(x) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("derivative follows the power rule") {
  const Polynomial p = Polynomial::parse("x1^3*x2 + 4*x2^2 - x1", 2);
  CHECK(p.derivative(0) == Polynomial::parse("3*x1^2*x2 - 1", 2));
  CHECK(p.derivative(1) == Polynomial::parse("x1^3 + 8*x2", 2));
  CHECK(Polynomial::constant(2, 5.0).derivative(0).is_zero());
}

TEST_CASE("ring operations are consistent") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Polynomial a = random_poly(rng, 2, 3, 4);
    const Polynomial b = random_poly(rng, 2, 3, 4);
    const Polynomial c = random_poly(rng, 2, 3, 4);
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a * b == b * a);
    CHECK((a - a).is_zero());
    // Product rule.
    CHECK((a * b).derivative(0) == a.derivative(0) * b + a * b.derivative(0));
  }
}

TEST_CASE("lifting appends variables") {
  const Polynomial p = Polynomial::parse("x1*x2 + 1", 2);
  const Polynomial q = p.lifted(3);
  CHECK(q.num_vars() == 3);
  CHECK(q.coefficient({1, 1, 0}) == 1.0);
  CHECK_THROWS_AS((void)q.lifted(2), Error);
}

TEST_CASE("arity mismatch is rejected") {
  CHECK_THROWS_AS(Polynomial(2) + Polynomial(3), Error);
  CHECK_THROWS_AS((void)Polynomial::monomial(1.0, {-1}), Error);
}

}
