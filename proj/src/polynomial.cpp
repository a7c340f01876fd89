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

#include "koopctl/polynomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "koopctl/error.hpp"

namespace koopctl {

Polynomial Polynomial::constant(std::size_t num_vars, double value) {
  Polynomial p(num_vars);
  p.add_term(Exponents(num_vars, 0), value);
  return p;
}

Polynomial Polynomial::variable(std::size_t num_vars, std::size_t index) {
  Exponents e(num_vars, 0);
  e.at(index) = 1;
  return monomial(1.0, std::move(e));
}

Polynomial Polynomial::monomial(double coefficient, Exponents exponents) {
  Polynomial p(exponents.size());
  p.add_term(exponents, coefficient);
  return p;
}

int Polynomial::degree() const noexcept {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int k : e) s += k;
    d = std::max(d, s);
  }
  return d;
}

int Polynomial::degree_in(std::size_t index) const noexcept {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[index]);
  return d;
}

double Polynomial::coefficient(const Exponents& exponents) const {
  auto it = terms_.find(exponents);
  return it == terms_.end() ? 0.0 : it->second;
}

bool Polynomial::all_finite() const noexcept {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const auto& t) { return std::isfinite(t.second); });
}

void Polynomial::add_term(const Exponents& exponents, double coefficient) {
  if (exponents.size() != num_vars_) {
    throw Error(ErrorCode::ValidationError, "monomial arity mismatch");
  }
  if (std::any_of(exponents.begin(), exponents.end(), [](int k) { return k < 0; })) {
    throw Error(ErrorCode::ValidationError, "negative exponent");
  }
  if (coefficient == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(exponents, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::operator()(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c;
    for (std::size_t k = 0; k < num_vars_; ++k) {
      for (int p = 0; p < e[k]; ++p) term *= x[k];
    }
    sum += term;
  }
  return sum;
}

Polynomial Polynomial::derivative(std::size_t index) const {
  Polynomial d(num_vars_);
  for (const auto& [e, c] : terms_) {
    if (e[index] == 0) continue;
    Exponents f = e;
    f[index] -= 1;
    d.add_term(f, c * e[index]);
  }
  return d;
}

Polynomial Polynomial::lifted(std::size_t num_vars) const {
  if (num_vars < num_vars_) {
    throw Error(ErrorCode::ValidationError, "cannot lift to fewer variables");
  }
  Polynomial p(num_vars);
  for (const auto& [e, c] : terms_) {
    Exponents f = e;
    f.resize(num_vars, 0);
    p.add_term(f, c);
  }
  return p;
}

void Polynomial::check_arity(const Polynomial& other) const {
  if (other.num_vars_ != num_vars_) {
    throw Error(ErrorCode::ValidationError, "polynomial arity mismatch");
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  check_arity(other);
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  check_arity(other);
  for (const auto& [e, c] : other.terms_) add_term(e, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double scalar) {
  if (scalar == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= scalar;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.check_arity(b);
  Polynomial p(a.num_vars_);
  Exponents e(a.num_vars_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      p.add_term(e, ca * cb);
    }
  }
  return p;
}

std::string Polynomial::to_string(bool with_z) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  char buf[64];
  for (const auto& [e, c] : terms_) {
    double mag = std::fabs(c);
    if (first) {
      if (c < 0) os << '-';
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    std::snprintf(buf, sizeof buf, "%.17g", mag);
    os << buf;
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (e[k] == 0) continue;
      if (with_z && k + 1 == e.size()) {
        os << "*z";
      } else {
        os << "*x" << (k + 1);
      }
      if (e[k] > 1) os << '^' << e[k];
    }
  }
  return os.str();
}

namespace {

class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t num_vars, bool allow_z)
      : text_(text), num_vars_(num_vars), allow_z_(allow_z) {}

  Polynomial parse() {
    Polynomial result(width());
    skip_ws();
    if (done()) fail("empty polynomial");
    bool first = true;
    while (!done()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1.0 : 1.0;
        ++pos_;
        skip_ws();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      first = false;
      auto [coef, exps] = parse_term();
      result.add_term(exps, sign * coef);
      skip_ws();
    }
    return result;
  }

 private:
  std::pair<double, Exponents> parse_term() {
    double coef = 1.0;
    Exponents exps(width(), 0);
    while (true) {
      skip_ws();
      if (done()) fail("dangling operator");
      char c = peek();
      if (c == 'x' || c == 'z') {
        ++pos_;
        std::size_t index = 0;
        if (c == 'z') {
          if (!allow_z_) fail("variable z not allowed here");
          index = num_vars_;
        } else {
          int k = parse_int();
          if (k < 1 || static_cast<std::size_t>(k) > num_vars_) {
            fail("variable index out of range");
          }
          index = static_cast<std::size_t>(k - 1);
        }
        int power = 1;
        skip_ws();
        if (!done() && peek() == '^') {
          ++pos_;
          skip_ws();
          power = parse_int();
        }
        exps[index] += power;
      } else {
        double v = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr == begin) fail("expected number or variable");
        pos_ += static_cast<std::size_t>(ptr - begin);
        coef *= v;
      }
      skip_ws();
      if (!done() && peek() == '*') {
        ++pos_;
        continue;
      }
      return {coef, exps};
    }
  }

  int parse_int() {
    int v = 0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr == begin) fail("expected integer");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  [[nodiscard]] bool done() const { return pos_ >= text_.size(); }
  [[nodiscard]] char peek() const { return text_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "polynomial '" + std::string(text_) +
                                           "' at column " + std::to_string(pos_ + 1) +
                                           ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t num_vars_;
  [[nodiscard]] std::size_t width() const noexcept { return num_vars_ + (allow_z_ ? 1 : 0); }
  bool allow_z_;
};

}  // namespace

Polynomial Polynomial::parse(std::string_view text, std::size_t num_vars, bool allow_z) {
  return PolyParser(text, num_vars, allow_z).parse();
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : num_vars_(p.num_vars()) {
  coefficients_.reserve(p.terms().size());
  exponents_.reserve(p.terms().size() * num_vars_);
  for (const auto& [e, c] : p.terms()) {
    coefficients_.push_back(c);
    exponents_.insert(exponents_.end(), e.begin(), e.end());
  }
}

double CompiledPolynomial::operator()(const double* x) const noexcept {
  double sum = 0.0;
  const int* e = exponents_.data();
  for (double c : coefficients_) {
    double term = c;
    for (std::size_t k = 0; k < num_vars_; ++k, ++e) {
      for (int p = 0; p < *e; ++p) term *= x[k];
    }
    sum += term;
  }
  return sum;
}

}  // namespace koopctl
