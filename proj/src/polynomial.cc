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

#include "brs/polynomial.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace brs {

// ---------------------------------------------------------------------------
// VarSet

VarSet::VarSet() : names_(std::make_shared<const std::vector<std::string>>()) {}

VarSet::VarSet(std::vector<std::string> names) {
  if (names.size() > Monomial::kMaxVars) {
    throw PolynomialError("too many variables (max " +
                          std::to_string(Monomial::kMaxVars) + ")");
  }
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw PolynomialError("empty variable name");
    if (!seen.insert(n).second) {
      throw PolynomialError("duplicate variable name '" + n + "'");
    }
  }
  names_ = std::make_shared<const std::vector<std::string>>(std::move(names));
}

std::optional<std::size_t> VarSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_->size(); ++i) {
    if ((*names_)[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t VarSet::index(std::string_view name) const {
  auto i = find(name);
  if (!i) throw PolynomialError("unknown variable '" + std::string(name) + "'");
  return *i;
}

bool VarSet::operator==(const VarSet& other) const {
  return names_ == other.names_ || *names_ == *other.names_;
}

// ---------------------------------------------------------------------------
// Monomial

Monomial::Monomial(std::size_t nvars) {
  if (nvars > kMaxVars) throw PolynomialError("too many variables");
  n_ = static_cast<std::uint8_t>(nvars);
}

Monomial::Monomial(std::initializer_list<int> exponents)
    : Monomial(exponents.size()) {
  std::size_t i = 0;
  for (int e : exponents) set(i++, e);
}

void Monomial::set(std::size_t i, int e) {
  if (e < 0 || e > 255) throw PolynomialError("exponent out of range");
  exp_[i] = static_cast<std::uint8_t>(e);
}

int Monomial::degree() const {
  int d = 0;
  for (std::size_t i = 0; i < n_; ++i) d += exp_[i];
  return d;
}

Monomial Monomial::operator*(const Monomial& other) const {
  if (n_ != other.n_) throw PolynomialError("monomial size mismatch");
  Monomial r(n_);
  for (std::size_t i = 0; i < n_; ++i) r.set(i, exp_[i] + other.exp_[i]);
  return r;
}

bool Monomial::divisible_by(const Monomial& other) const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (other.exp_[i] > exp_[i]) return false;
  }
  return true;
}

double Monomial::eval(std::span<const double> point) const {
  double v = 1.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (int k = 0; k < exp_[i]; ++k) v *= point[i];
  }
  return v;
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(VarSet vars) : vars_(std::move(vars)) {}

Polynomial::Polynomial(VarSet vars, double constant) : vars_(std::move(vars)) {
  if (constant != 0.0) terms_.emplace(Monomial(vars_.size()), constant);
}

Polynomial::Polynomial(VarSet vars, TermMap terms)
    : vars_(std::move(vars)), terms_(std::move(terms)) {
  for (const auto& [m, c] : terms_) {
    if (m.size() != vars_.size()) {
      throw PolynomialError("monomial does not match variable set");
    }
  }
  canonicalize();
}

Polynomial Polynomial::variable(const VarSet& vars, std::string_view name) {
  Monomial m(vars.size());
  m.set(vars.index(name), 1);
  return monomial(vars, m, 1.0);
}

Polynomial Polynomial::monomial(const VarSet& vars, const Monomial& m, double c) {
  TermMap t;
  t.emplace(m, c);
  return Polynomial(vars, std::move(t));
}

void Polynomial::canonicalize() {
  double cmax = 0.0;
  for (const auto& [m, c] : terms_) {
    if (!std::isfinite(c)) throw PolynomialError("non-finite coefficient");
    cmax = std::max(cmax, std::abs(c));
  }
  const double cut = kDropTolerance * cmax;
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (it->second == 0.0 || std::abs(it->second) < cut) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

void Polynomial::require_same_vars(const Polynomial& q) const {
  if (!(vars_ == q.vars_)) throw PolynomialError("variable set mismatch");
}

int Polynomial::degree() const {
  if (terms_.empty()) return -1;
  return terms_.rbegin()->first.degree();
}

int Polynomial::degree_in(std::size_t var) const {
  if (terms_.empty()) return -1;
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m[var]);
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::constant() const {
  return coefficient(Monomial(vars_.size()));
}

bool Polynomial::depends_on(std::size_t var) const {
  for (const auto& [m, c] : terms_) {
    if (m[var] > 0) return true;
  }
  return false;
}

double Polynomial::max_abs_coefficient() const {
  double r = 0.0;
  for (const auto& [m, c] : terms_) r = std::max(r, std::abs(c));
  return r;
}

Polynomial Polynomial::operator+(const Polynomial& q) const {
  Polynomial r = *this;
  r += q;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& q) const {
  Polynomial r = *this;
  r -= q;
  return r;
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  require_same_vars(q);
  for (const auto& [m, c] : q.terms_) terms_[m] += c;
  canonicalize();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  require_same_vars(q);
  for (const auto& [m, c] : q.terms_) terms_[m] -= c;
  canonicalize();
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& q) const {
  require_same_vars(q);
  TermMap out;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : q.terms_) out[ma * mb] += ca * cb;
  }
  return Polynomial(vars_, std::move(out));
}

Polynomial& Polynomial::operator*=(const Polynomial& q) {
  *this = *this * q;
  return *this;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r = *this;
  for (auto& [m, c] : r.terms_) c *= s;
  r.canonicalize();
  return r;
}

Polynomial Polynomial::operator+(double s) const {
  return *this + Polynomial(vars_, s);
}

Polynomial Polynomial::operator-(double s) const {
  return *this + Polynomial(vars_, -s);
}

Polynomial Polynomial::pow(int e) const {
  if (e < 0) throw PolynomialError("negative power");
  Polynomial result(vars_, 1.0);
  Polynomial base = *this;
  while (e > 0) {
    if (e & 1) result *= base;
    e >>= 1;
    if (e > 0) base *= base;
  }
  return result;
}

bool Polynomial::operator==(const Polynomial& q) const {
  return vars_ == q.vars_ && terms_ == q.terms_;
}

Polynomial Polynomial::diff(std::size_t var) const {
  if (var >= vars_.size()) throw PolynomialError("unknown variable index");
  TermMap out;
  for (const auto& [m, c] : terms_) {
    const int e = m[var];
    if (e == 0) continue;
    Monomial d = m;
    d.set(var, e - 1);
    out[d] += c * e;
  }
  return Polynomial(vars_, std::move(out));
}

double Polynomial::eval(std::span<const double> point) const {
  if (point.size() != vars_.size()) {
    throw PolynomialError("evaluation point has wrong dimension");
  }
  const std::size_t n = vars_.size();
  std::vector<std::vector<double>> powers(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int d = std::max(degree_in(i), 0);
    powers[i].resize(d + 1);
    powers[i][0] = 1.0;
    for (int k = 1; k <= d; ++k) powers[i][k] = powers[i][k - 1] * point[i];
  }
  double sum = 0.0;
  double comp = 0.0;
  for (const auto& [m, c] : terms_) {
    double v = c;
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i]) v *= powers[i][m[i]];
    }
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

Polynomial Polynomial::substitute(std::size_t var, const Polynomial& q) const {
  require_same_vars(q);
  if (var >= vars_.size()) throw PolynomialError("unknown variable index");
  std::vector<Polynomial> qpow{Polynomial(vars_, 1.0)};
  Polynomial result(vars_);
  // Group by exponent of `var` so every power of q is built once.
  std::map<int, TermMap> groups;
  for (const auto& [m, c] : terms_) {
    Monomial rest = m;
    rest.set(var, 0);
    groups[m[var]][rest] += c;
  }
  for (auto& [e, tm] : groups) {
    while (static_cast<int>(qpow.size()) <= e) qpow.push_back(qpow.back() * q);
    Polynomial part(vars_, std::move(tm));
    if (e == 0) {
      result += part;
    } else {
      result += part * qpow[e];
    }
  }
  return result;
}

Polynomial Polynomial::substitute(std::size_t var, double value) const {
  return substitute(var, Polynomial(vars_, value));
}

Polynomial Polynomial::rebase(const VarSet& to) const {
  if (vars_ == to) return *this;
  std::vector<int> map(vars_.size(), -1);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (auto j = to.find(vars_.name(i))) map[i] = static_cast<int>(*j);
  }
  TermMap out;
  for (const auto& [m, c] : terms_) {
    Monomial r(to.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (m[i] == 0) continue;
      if (map[i] < 0) {
        throw PolynomialError("variable '" + vars_.name(i) + "' is not available here");
      }
      r.set(map[i], m[i]);
    }
    out[r] += c;
  }
  return Polynomial(to, std::move(out));
}

Polynomial Polynomial::pruned(double tol) const {
  TermMap out;
  for (const auto& [m, c] : terms_) {
    if (std::abs(c) > tol) out.emplace(m, c);
  }
  return Polynomial(vars_, std::move(out));
}

// ---------------------------------------------------------------------------
// Text form

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string monomial_to_string(const VarSet& vars, const Monomial& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) continue;
    if (!s.empty()) s += '*';
    s += vars.name(i);
    if (m[i] > 1) s += '^' + std::to_string(m[i]);
  }
  return s.empty() ? "1" : s;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const Monomial& m = it->first;
    double c = it->second;
    const bool neg = std::signbit(c);
    if (first) {
      if (neg) out += '-';
    } else {
      out += neg ? " - " : " + ";
    }
    c = std::abs(c);
    if (m.is_constant()) {
      out += format_double(c);
    } else {
      if (c != 1.0) out += format_double(c) + '*';
      out += monomial_to_string(vars_, m);
    }
    first = false;
  }
  return out;
}

namespace {

class Parser {
 public:
  Parser(const VarSet& vars, std::string_view text) : vars_(vars), s_(text) {}

  Polynomial parse_all() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw PolynomialError("polynomial parse error at offset " +
                          std::to_string(pos_) + ": " + what + " in \"" +
                          std::string(s_) + "\"");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial p = term();
    for (;;) {
      if (accept('+')) {
        p += term();
      } else if (accept('-')) {
        p -= term();
      } else {
        return p;
      }
    }
  }

  Polynomial term() {
    Polynomial p = unary();
    for (;;) {
      if (accept('*')) {
        p *= unary();
      } else if (accept('/')) {
        Polynomial d = unary();
        if (d.degree() > 0) fail("division by a non-constant");
        const double c = d.constant();
        if (c == 0.0) fail("division by zero");
        p = p * (1.0 / c);
      } else {
        return p;
      }
    }
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    if (accept('^')) {
      skip_ws();
      int e = 0;
      auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), e);
      if (res.ec != std::errc() || e < 0) fail("expected a nonnegative integer exponent");
      pos_ = res.ptr - s_.data();
      return base.pow(e);
    }
    return base;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (res.ec != std::errc()) fail("bad number");
      pos_ = res.ptr - s_.data();
      return Polynomial(vars_, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view name = s_.substr(start, pos_ - start);
      auto idx = vars_.find(name);
      if (!idx) {
        pos_ = start;
        fail("unknown variable '" + std::string(name) + "'");
      }
      Monomial m(vars_.size());
      m.set(*idx, 1);
      return Polynomial::monomial(vars_, m);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  const VarSet& vars_;
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial Polynomial::parse(const VarSet& vars, std::string_view text) {
  return Parser(vars, text).parse_all();
}

// ---------------------------------------------------------------------------

std::vector<Monomial> monomial_basis(const VarSet& vars,
                                     std::span<const std::size_t> var_indices,
                                     int d) {
  if (d < 0) throw PolynomialError("negative basis degree");
  for (std::size_t v : var_indices) {
    if (v >= vars.size()) throw PolynomialError("basis variable out of range");
  }
  std::vector<Monomial> out;
  const std::size_t k = var_indices.size();
  // Enumerate exponent tuples with total <= d recursively.
  std::vector<int> e(k, 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i == k) {
      Monomial m(vars.size());
      for (std::size_t j = 0; j < k; ++j) m.set(var_indices[j], e[j]);
      out.push_back(m);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[i] = p;
      self(self, i + 1, left - p);
    }
    e[i] = 0;
  };
  rec(rec, 0, d);
  std::sort(out.begin(), out.end(), GradedLexLess{});
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------

CompiledPolynomial::CompiledPolynomial(const Polynomial& p)
    : nvars_(p.vars().size()), max_exp_(nvars_, 0) {
  for (const auto& [m, c] : p.terms()) {
    coeffs_.push_back(c);
    for (std::size_t i = 0; i < nvars_; ++i) {
      exps_.push_back(static_cast<std::uint8_t>(m[i]));
      max_exp_[i] = std::max(max_exp_[i], m[i]);
    }
  }
}

double CompiledPolynomial::operator()(std::span<const double> point) const {
  if (coeffs_.empty()) return 0.0;
  // Small fixed table of powers; exponents are bounded by 255.
  std::array<std::array<double, 16>, Monomial::kMaxVars> pw;
  for (std::size_t i = 0; i < nvars_; ++i) {
    if (max_exp_[i] < 16) {
      pw[i][0] = 1.0;
      for (int k = 1; k <= max_exp_[i]; ++k) pw[i][k] = pw[i][k - 1] * point[i];
    } else {
      throw PolynomialError("compiled evaluation supports exponents < 16");
    }
  }
  double sum = 0.0;
  const std::size_t nt = coeffs_.size();
  for (std::size_t t = 0; t < nt; ++t) {
    double v = coeffs_[t];
    const std::uint8_t* e = &exps_[t * nvars_];
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (e[i]) v *= pw[i][e[i]];
    }
    sum += v;
  }
  return sum;
}

}  // namespace brs
