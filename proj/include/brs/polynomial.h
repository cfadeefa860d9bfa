// Copyright 2026 The brs Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Sparse multivariate polynomials with double coefficients over an ordered
// variable set. Polynomials are immutable-by-convention values: every
// operation returns a new canonical polynomial, so instances can be shared
// across threads freely.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace brs {

/// Thrown on malformed polynomial input or inconsistent operands.
class PolynomialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered list of distinct variable names. Copies share storage.
class VarSet {
 public:
  VarSet();
  explicit VarSet(std::vector<std::string> names);

  std::size_t size() const { return names_->size(); }
  const std::string& name(std::size_t i) const { return (*names_)[i]; }
  const std::vector<std::string>& names() const { return *names_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Like find() but throws PolynomialError for unknown names.
  std::size_t index(std::string_view name) const;

  bool operator==(const VarSet& other) const;

 private:
  std::shared_ptr<const std::vector<std::string>> names_;
};

/// Exponent tuple aligned with a VarSet.
class Monomial {
 public:
  static constexpr std::size_t kMaxVars = 16;

  Monomial() = default;
  explicit Monomial(std::size_t nvars);
  Monomial(std::initializer_list<int> exponents);

  std::size_t size() const { return n_; }
  int operator[](std::size_t i) const { return exp_[i]; }
  void set(std::size_t i, int e);
  int degree() const;
  bool is_constant() const { return degree() == 0; }

  Monomial operator*(const Monomial& other) const;
  /// Exponent-wise test other | this.
  bool divisible_by(const Monomial& other) const;

  bool operator==(const Monomial& o) const { return n_ == o.n_ && exp_ == o.exp_; }
  bool operator!=(const Monomial& o) const { return !(*this == o); }

  /// Evaluates the monomial at `point` (size must match).
  double eval(std::span<const double> point) const;

 private:
  std::array<std::uint8_t, kMaxVars> exp_{};
  std::uint8_t n_ = 0;
};

/// Graded-lex order: lower total degree first; ties broken so that x1 comes
/// before x2 (larger exponent on the earlier variable first).
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// Sparse polynomial in canonical form: no stored zeros, terms ordered by
/// GradedLexLess.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLexLess>;

  /// Relative threshold below which coefficients are dropped after arithmetic.
  static constexpr double kDropTolerance = 1e-14;

  explicit Polynomial(VarSet vars);
  Polynomial(VarSet vars, double constant);
  Polynomial(VarSet vars, TermMap terms);

  static Polynomial variable(const VarSet& vars, std::string_view name);
  static Polynomial monomial(const VarSet& vars, const Monomial& m, double c = 1.0);

  const VarSet& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Total degree; the zero polynomial has degree -1.
  int degree() const;
  /// Maximum exponent of variable `var` over all terms (-1 for zero).
  int degree_in(std::size_t var) const;
  double coefficient(const Monomial& m) const;
  /// Constant term.
  double constant() const;
  /// True iff some term involves variable `var`.
  bool depends_on(std::size_t var) const;
  double max_abs_coefficient() const;

  Polynomial operator+(const Polynomial& q) const;
  Polynomial operator-(const Polynomial& q) const;
  Polynomial operator-() const;
  Polynomial operator*(const Polynomial& q) const;
  Polynomial operator*(double s) const;
  Polynomial operator+(double s) const;
  Polynomial operator-(double s) const;
  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);
  Polynomial& operator*=(const Polynomial& q);
  Polynomial pow(int e) const;

  /// Exact equality of the canonical term maps.
  bool operator==(const Polynomial& q) const;
  bool operator!=(const Polynomial& q) const { return !(*this == q); }

  /// Partial derivative with respect to `var`.
  Polynomial diff(std::size_t var) const;
  Polynomial diff(std::string_view var) const { return diff(vars_.index(var)); }

  /// Evaluation with compensated (Neumaier) summation.
  double eval(std::span<const double> point) const;

  /// Replaces variable `var` with `q` (same VarSet) exactly.
  Polynomial substitute(std::size_t var, const Polynomial& q) const;
  Polynomial substitute(std::string_view var, const Polynomial& q) const {
    return substitute(vars_.index(var), q);
  }
  Polynomial substitute(std::size_t var, double value) const;

  /// Same polynomial over another variable set, matching variables by name.
  /// Throws if a variable in use is missing from `to`.
  Polynomial rebase(const VarSet& to) const;

  /// Drops terms with |c| <= tol (absolute).
  Polynomial pruned(double tol) const;

  /// Infix rendering, e.g. "2*x1^2*t - 0.5"; exact round trip through parse().
  std::string to_string() const;
  static Polynomial parse(const VarSet& vars, std::string_view text);

 private:
  void canonicalize();
  void require_same_vars(const Polynomial& q) const;

  VarSet vars_;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }
inline Polynomial operator+(double s, const Polynomial& p) { return p + s; }
inline Polynomial operator-(double s, const Polynomial& p) { return (-p) + s; }

/// Monomials of total degree <= d in the variables `var_indices`, in
/// graded-lex order. Count is C(|vars| + d, d).
std::vector<Monomial> monomial_basis(const VarSet& vars,
                                     std::span<const std::size_t> var_indices,
                                     int d);

/// Renders a single monomial ("1" for the constant monomial).
std::string monomial_to_string(const VarSet& vars, const Monomial& m);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Evaluates many polynomials over the same VarSet quickly at one point by
/// sharing a table of variable powers. Used by simulation and sampling.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);
  double operator()(std::span<const double> point) const;
  bool is_zero() const { return coeffs_.empty(); }

 private:
  std::size_t nvars_ = 0;
  std::vector<int> max_exp_;
  std::vector<double> coeffs_;
  std::vector<std::uint8_t> exps_;  // row-major, nvars_ per term
};

}  // namespace brs
