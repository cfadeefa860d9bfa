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

#include "brs/sos.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace brs {

// ---------------------------------------------------------------------------
// LinExpr

LinExpr LinExpr::var(int index, double scale) {
  LinExpr e;
  if (scale != 0.0) e.coef[index] = scale;
  return e;
}

LinExpr& LinExpr::add_scaled(const LinExpr& o, double s) {
  if (s == 0.0) return *this;
  constant += s * o.constant;
  for (const auto& [k, v] : o.coef) {
    auto [it, inserted] = coef.emplace(k, s * v);
    if (!inserted) {
      it->second += s * v;
      if (it->second == 0.0) coef.erase(it);
    }
  }
  return *this;
}

LinExpr LinExpr::operator+(const LinExpr& o) const {
  LinExpr r = *this;
  return r.add_scaled(o, 1.0);
}

LinExpr LinExpr::operator-(const LinExpr& o) const {
  LinExpr r = *this;
  return r.add_scaled(o, -1.0);
}

LinExpr LinExpr::operator*(double s) const {
  LinExpr r;
  return r.add_scaled(*this, s);
}

double LinExpr::eval(const std::vector<double>& values) const {
  double s = constant;
  for (const auto& [k, v] : coef) s += v * values.at(k);
  return s;
}

// ---------------------------------------------------------------------------
// AffinePoly

namespace {

bool is_zero(const LinExpr& e) { return e.constant == 0.0 && e.coef.empty(); }

std::string join(const std::vector<std::string>& v) {
  if (v.empty()) return "<constant>";
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += v[i];
  }
  return s;
}

}  // namespace

AffinePoly::AffinePoly(VarSet vars, OwnerTable owners)
    : vars_(std::move(vars)), owners_(std::move(owners)) {}

AffinePoly::AffinePoly(const Polynomial& p, OwnerTable owners)
    : vars_(p.vars()), owners_(std::move(owners)) {
  for (const auto& [m, c] : p.terms()) terms_.emplace(m, LinExpr(c));
}

bool AffinePoly::is_constant() const {
  for (const auto& [m, e] : terms_) {
    if (!e.is_constant()) return false;
  }
  return true;
}

Polynomial AffinePoly::constant_part() const {
  Polynomial::TermMap tm;
  for (const auto& [m, e] : terms_) {
    if (e.constant != 0.0) tm.emplace(m, e.constant);
  }
  return Polynomial(vars_, std::move(tm));
}

int AffinePoly::degree() const {
  if (terms_.empty()) return -1;
  return terms_.rbegin()->first.degree();
}

std::vector<Monomial> AffinePoly::support() const {
  std::vector<Monomial> out;
  out.reserve(terms_.size());
  for (const auto& [m, e] : terms_) out.push_back(m);
  return out;
}

std::vector<std::string> AffinePoly::owner_names() const {
  std::set<int> idx;
  for (const auto& [m, e] : terms_) {
    for (const auto& [k, v] : e.coef) idx.insert(k);
  }
  std::vector<std::string> names;
  for (int k : idx) {
    std::string n = owners_ && k < static_cast<int>(owners_->size())
                         ? (*owners_)[k]
                         : "#" + std::to_string(k);
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  }
  return names;
}

void AffinePoly::prune() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (is_zero(it->second)) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

void AffinePoly::merge_owners(const AffinePoly& o) {
  if (!owners_) owners_ = o.owners_;
}

void AffinePoly::add_term(const Monomial& m, const LinExpr& e, double scale) {
  if (m.size() != vars_.size()) throw SosError("monomial does not match variable set");
  auto [it, inserted] = terms_.try_emplace(m);
  it->second.add_scaled(e, scale);
  if (is_zero(it->second)) terms_.erase(it);
}

AffinePoly& AffinePoly::operator+=(const AffinePoly& o) {
  if (!(vars_ == o.vars_)) throw SosError("variable set mismatch");
  merge_owners(o);
  for (const auto& [m, e] : o.terms_) add_term(m, e, 1.0);
  return *this;
}

AffinePoly& AffinePoly::operator-=(const AffinePoly& o) {
  if (!(vars_ == o.vars_)) throw SosError("variable set mismatch");
  merge_owners(o);
  for (const auto& [m, e] : o.terms_) add_term(m, e, -1.0);
  return *this;
}

AffinePoly AffinePoly::operator+(const AffinePoly& o) const {
  AffinePoly r = *this;
  r += o;
  return r;
}

AffinePoly AffinePoly::operator-(const AffinePoly& o) const {
  AffinePoly r = *this;
  r -= o;
  return r;
}

AffinePoly AffinePoly::operator-() const { return *this * -1.0; }

AffinePoly AffinePoly::operator*(double s) const {
  AffinePoly r(vars_, owners_);
  if (s == 0.0) return r;
  for (const auto& [m, e] : terms_) r.terms_.emplace(m, e * s);
  r.prune();
  return r;
}

AffinePoly AffinePoly::operator*(const Polynomial& p) const {
  if (!(vars_ == p.vars())) throw SosError("variable set mismatch");
  AffinePoly r(vars_, owners_);
  for (const auto& [ma, e] : terms_) {
    for (const auto& [mb, c] : p.terms()) r.add_term(ma * mb, e, c);
  }
  return r;
}

AffinePoly AffinePoly::operator*(const AffinePoly& o) const {
  if (o.is_constant()) return *this * o.constant_part();
  if (is_constant()) {
    AffinePoly r = o * constant_part();
    return r;
  }
  throw BilinearError("bilinear product " + join(owner_names()) + " * " +
                      join(o.owner_names()));
}

AffinePoly operator*(const Polynomial& p, const AffinePoly& a) { return a * p; }
AffinePoly operator*(double s, const AffinePoly& a) { return a * s; }

AffinePoly AffinePoly::diff(std::size_t var) const {
  if (var >= vars_.size()) throw SosError("unknown variable index");
  AffinePoly r(vars_, owners_);
  for (const auto& [m, e] : terms_) {
    const int k = m[var];
    if (k == 0) continue;
    Monomial d = m;
    d.set(var, k - 1);
    r.add_term(d, e, k);
  }
  return r;
}

AffinePoly AffinePoly::substitute(std::size_t var, const Polynomial& q) const {
  if (var >= vars_.size()) throw SosError("unknown variable index");
  if (!(q.vars() == vars_)) throw SosError("variable set mismatch");
  std::vector<Polynomial> qpow{Polynomial(vars_, 1.0)};
  AffinePoly r(vars_, owners_);
  for (const auto& [m, e] : terms_) {
    const int k = m[var];
    while (static_cast<int>(qpow.size()) <= k) qpow.push_back(qpow.back() * q);
    Monomial rest = m;
    rest.set(var, 0);
    for (const auto& [mq, c] : qpow[k].terms()) r.add_term(rest * mq, e, c);
  }
  return r;
}

AffinePoly AffinePoly::substitute(std::size_t var, double value) const {
  return substitute(var, Polynomial(vars_, value));
}

Polynomial AffinePoly::eval(const std::vector<double>& values) const {
  Polynomial::TermMap tm;
  for (const auto& [m, e] : terms_) {
    const double v = e.eval(values);
    if (v != 0.0) tm.emplace(m, v);
  }
  return Polynomial(vars_, std::move(tm));
}

// ---------------------------------------------------------------------------
// Gram bases

namespace {

Monomial add_exponents(const Monomial& a, const Monomial& b) { return a * b; }

// 2 * m as an exponent vector.
Monomial doubled(const Monomial& m) { return m * m; }

}  // namespace

std::vector<Monomial> default_gram_basis(const VarSet& vars,
                                         const std::vector<Monomial>& support) {
  if (support.empty()) return {};
  const std::size_t n = vars.size();
  std::vector<int> lo(n, 255), hi(n, 0);
  int dlo = 1 << 20, dhi = 0;
  for (const auto& m : support) {
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], m[i]);
      hi[i] = std::max(hi[i], m[i]);
    }
    dlo = std::min(dlo, m.degree());
    dhi = std::max(dhi, m.degree());
  }
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < n; ++i) {
    if (hi[i] > 0) present.push_back(i);
  }
  std::vector<Monomial> cand = monomial_basis(vars, present, dhi / 2);
  std::vector<Monomial> basis;
  for (const auto& z : cand) {
    bool ok = z.degree() * 2 >= dlo;
    for (std::size_t i = 0; i < n && ok; ++i) {
      ok = 2 * z[i] >= lo[i] && 2 * z[i] <= hi[i];
    }
    if (ok) basis.push_back(z);
  }

  // A basis monomial whose square is neither in the support nor a cross
  // product of two other basis monomials has a zero diagonal Gram entry,
  // hence a zero row in any PSD solution.
  std::set<Monomial, GradedLexLess> supp(support.begin(), support.end());
  for (bool changed = true; changed;) {
    changed = false;
    std::set<Monomial, GradedLexLess> cross;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = a + 1; b < basis.size(); ++b) {
        cross.insert(add_exponents(basis[a], basis[b]));
      }
    }
    std::vector<Monomial> kept;
    for (const auto& z : basis) {
      const Monomial sq = doubled(z);
      if (supp.count(sq) || cross.count(sq)) {
        kept.push_back(z);
      } else {
        changed = true;
      }
    }
    basis.swap(kept);
  }
  return basis;
}

GramParametrization gram_parametrize(const AffinePoly& expr,
                                     const std::vector<Monomial>& basis,
                                     std::vector<Monomial>* uncovered) {
  GramParametrization g;
  g.basis = basis;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != expr.vars().size()) {
      throw SosError("gram basis does not match variable set");
    }
    for (std::size_t j = i; j < basis.size(); ++j) {
      g.pairs[basis[i] * basis[j]].emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  for (std::size_t i = 1; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (basis[i] == basis[j]) throw SosError("gram basis has duplicate monomials");
    }
  }
  if (uncovered) uncovered->clear();
  for (const auto& [m, e] : expr.terms()) {
    if (g.pairs.count(m)) continue;
    if (e.is_constant()) {
      throw BasisInsufficientError("gram basis cannot represent monomial " +
                                   monomial_to_string(expr.vars(), m));
    }
    if (uncovered) uncovered->push_back(m);
  }
  return g;
}

Polynomial gram_polynomial(const VarSet& vars, const Eigen::MatrixXd& Q,
                           const std::vector<Monomial>& basis) {
  if (Q.rows() != static_cast<Eigen::Index>(basis.size()) || Q.cols() != Q.rows()) {
    throw SosError("gram matrix does not match basis");
  }
  Polynomial::TermMap tm;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) tm[basis[i] * basis[j]] += Q(i, j);
  }
  return Polynomial(vars, std::move(tm));
}

double gram_residual(const Polynomial& expr, const Eigen::MatrixXd& Q,
                     const std::vector<Monomial>& basis) {
  std::map<Monomial, double, GradedLexLess> diff;
  for (const auto& [m, c] : expr.terms()) diff[m] += c;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) diff[basis[i] * basis[j]] -= Q(i, j);
  }
  double r = 0.0;
  for (const auto& [m, v] : diff) r = std::max(r, std::abs(v));
  return r;
}

// ---------------------------------------------------------------------------
// SosProgram

SosProgram::SosProgram(VarSet vars)
    : vars_(std::move(vars)), owners_(std::make_shared<std::vector<std::string>>()) {}

int SosProgram::add_scalar(const std::string& name, bool nonneg) {
  kinds_.push_back(nonneg ? ScalarKind::kNonneg : ScalarKind::kFree);
  scalar_block_.push_back(-1);
  owners_->push_back(name);
  return num_scalars() - 1;
}

AffinePoly SosProgram::scalar_poly(int scalar) const {
  AffinePoly p(vars_, owners_);
  p.add_term(Monomial(vars_.size()), LinExpr::var(scalar));
  return p;
}

AffinePoly SosProgram::new_free_poly(const std::string& name,
                                     const std::vector<Monomial>& basis) {
  AffinePoly p(vars_, owners_);
  for (const auto& m : basis) p.add_term(m, LinExpr::var(add_scalar(name)));
  return p;
}

int SosProgram::new_psd_block(const std::string& name, const std::vector<Monomial>& basis) {
  PsdBlock blk;
  blk.name = name;
  blk.size = static_cast<int>(basis.size());
  blk.first_scalar = num_scalars();
  blk.basis = basis;
  const int id = static_cast<int>(blocks_.size());
  for (int i = 0; i < blk.size; ++i) {
    for (int j = i; j < blk.size; ++j) {
      kinds_.push_back(ScalarKind::kPsd);
      scalar_block_.push_back(id);
      owners_->push_back(name);
    }
  }
  blocks_.push_back(std::move(blk));
  return id;
}

AffinePoly SosProgram::new_sos_poly(const std::string& name,
                                    const std::vector<Monomial>& half_basis) {
  AffinePoly p(vars_, owners_);
  if (half_basis.empty()) return p;
  const int b = new_psd_block(name, half_basis);
  const int n = blocks_[b].size;
  int k = blocks_[b].first_scalar;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      p.add_term(half_basis[i] * half_basis[j], LinExpr::var(k, i == j ? 1.0 : 2.0));
    }
  }
  return p;
}

void SosProgram::check_vars(const AffinePoly& e) const {
  if (!(e.vars() == vars_)) throw SosError("expression variable set mismatch");
  for (const auto& [m, le] : e.terms()) {
    for (const auto& [k, v] : le.coef) {
      if (k < 0 || k >= num_scalars()) throw SosError("expression uses unknown scalar");
    }
  }
}

int SosProgram::add_sos_constraint(const std::string& name, const AffinePoly& expr,
                                   std::optional<std::vector<Monomial>> basis) {
  check_vars(expr);
  SosConstraint c;
  c.name = name;
  c.expr = expr;
  c.basis = basis ? *basis : default_gram_basis(vars_, expr.support());
  gram_parametrize(c.expr, c.basis);  // validates coverage
  c.block = c.basis.empty() ? -1 : new_psd_block(name, c.basis);
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

void SosProgram::add_zero_constraint(const AffinePoly& expr) {
  check_vars(expr);
  for (const auto& [m, e] : expr.terms()) add_equality(e);
}

void SosProgram::add_equality(const LinExpr& e) {
  if (e.is_constant()) {
    if (e.constant != 0.0) throw SosError("inconsistent constant equality");
    return;
  }
  equalities_.push_back(e);
}

void SosProgram::add_nonnegative(const LinExpr& e) {
  if (e.is_constant()) {
    if (e.constant < 0.0) throw SosError("inconsistent constant inequality");
    return;
  }
  inequalities_.push_back(e);
}

// ---------------------------------------------------------------------------
// compile / extract

CompiledProgram compile(const SosProgram& p) {
  CompiledProgram out;
  sdp::ConicProblem& cp = out.cp;
  const int ns = p.num_scalars();
  out.column.assign(ns, -1);

  int nfree = 0, nnonneg = 0;
  for (int k = 0; k < ns; ++k) {
    if (p.kinds_[k] == ScalarKind::kFree) ++nfree;
    if (p.kinds_[k] == ScalarKind::kNonneg) ++nnonneg;
  }
  const int nslack = static_cast<int>(p.inequalities_.size());
  cp.num_free = nfree;
  cp.num_nonneg = nnonneg + nslack;
  for (const auto& b : p.blocks_) cp.psd_sizes.push_back(b.size);

  int fi = 0, li = 0;
  for (int k = 0; k < ns; ++k) {
    if (p.kinds_[k] == ScalarKind::kFree) out.column[k] = fi++;
    if (p.kinds_[k] == ScalarKind::kNonneg) out.column[k] = nfree + li++;
  }
  for (std::size_t b = 0; b < p.blocks_.size(); ++b) {
    const int off = cp.psd_offset(static_cast<int>(b));
    const int n = p.blocks_[b].size;
    for (int t = 0; t < sdp::ConicProblem::tri_size(n); ++t) {
      out.column[p.blocks_[b].first_scalar + t] = off + t;
    }
  }

  const int nvars = cp.num_vars();
  cp.c.assign(nvars, 0.0);
  cp.var_names.assign(nvars, "");
  {
    std::vector<int> local(ns, 0);
    std::map<std::string, int> counter;
    for (int k = 0; k < ns; ++k) {
      const std::string& o = (*p.owners_)[k];
      cp.var_names[out.column[k]] = o + "#" + std::to_string(counter[o]++);
    }
    for (int s = 0; s < nslack; ++s) {
      cp.var_names[nfree + nnonneg + s] = "slack#" + std::to_string(s);
    }
  }
  for (const auto& [k, v] : p.objective_.coef) cp.c[out.column[k]] += v;

  auto emit_row = [&](const std::map<int, double>& row, double rhs) {
    if (row.empty()) {
      if (std::abs(rhs) > 0.0) throw SosError("inconsistent equality row");
      return;
    }
    const int r = cp.num_rows();
    for (const auto& [col, v] : row) {
      if (v != 0.0) cp.A.push_back({r, col, v});
    }
    cp.b.push_back(rhs);
  };

  for (const auto& c : p.constraints_) {
    const GramParametrization g = gram_parametrize(c.expr, c.basis);
    std::set<Monomial, GradedLexLess> mons;
    for (const auto& [m, e] : c.expr.terms()) mons.insert(m);
    for (const auto& [m, pr] : g.pairs) mons.insert(m);
    const PsdBlock* blk = c.block >= 0 ? &p.blocks_[c.block] : nullptr;
    for (const auto& m : mons) {
      std::map<int, double> row;
      double rhs = 0.0;
      auto it = c.expr.terms().find(m);
      if (it != c.expr.terms().end()) {
        for (const auto& [k, v] : it->second.coef) row[out.column[k]] += v;
        rhs = -it->second.constant;
      }
      auto pit = g.pairs.find(m);
      if (pit != g.pairs.end() && blk) {
        const int off = cp.psd_offset(c.block);
        for (const auto& [i, j] : pit->second) {
          row[off + sdp::ConicProblem::tri_index(blk->size, i, j)] -= i == j ? 1.0 : 2.0;
        }
      }
      for (auto rit = row.begin(); rit != row.end();) {
        rit = rit->second == 0.0 ? row.erase(rit) : std::next(rit);
      }
      emit_row(row, rhs);
    }
  }
  for (const auto& e : p.equalities_) {
    std::map<int, double> row;
    for (const auto& [k, v] : e.coef) row[out.column[k]] += v;
    emit_row(row, -e.constant);
  }
  for (int s = 0; s < nslack; ++s) {
    const LinExpr& e = p.inequalities_[s];
    std::map<int, double> row;
    for (const auto& [k, v] : e.coef) row[out.column[k]] += v;
    row[nfree + nnonneg + s] -= 1.0;
    emit_row(row, -e.constant);
  }
  cp.validate();
  return out;
}

Assignment extract(const SosProgram& p, const CompiledProgram& c,
                   const sdp::ConicSolution& sol) {
  if (sol.status == sdp::Status::kInfeasible || sol.status == sdp::Status::kUnbounded) {
    throw SosError(std::string("cannot extract from solver status ") +
                   sdp::to_string(sol.status));
  }
  Assignment a;
  const int ns = p.num_scalars();
  a.scalars.resize(ns);
  for (int k = 0; k < ns; ++k) a.scalars[k] = sol.x.at(c.column[k]);
  for (std::size_t b = 0; b < p.blocks().size(); ++b) {
    const PsdBlock& blk = p.blocks()[b];
    Eigen::MatrixXd Q(blk.size, blk.size);
    int k = blk.first_scalar;
    for (int i = 0; i < blk.size; ++i) {
      for (int j = i; j < blk.size; ++j, ++k) Q(i, j) = Q(j, i) = a.scalars[k];
    }
    a.blocks.push_back(std::move(Q));
  }

  for (const auto& con : p.constraints()) {
    const Polynomial val = con.expr.eval(a.scalars);
    if (con.block < 0) {
      a.residuals.push_back(val.max_abs_coefficient());
      a.min_eigs.push_back(0.0);
      continue;
    }
    Eigen::MatrixXd& Q = a.blocks[con.block];
    const GramParametrization g = gram_parametrize(con.expr, con.basis);
    // Minimum-Frobenius-norm correction onto z'Qz == val.
    for (const auto& [m, prs] : g.pairs) {
      double e = val.coefficient(m);
      int count = 0;
      for (const auto& [i, j] : prs) {
        e -= i == j ? Q(i, i) : 2.0 * Q(i, j);
        count += i == j ? 1 : 2;
      }
      const double d = e / count;
      for (const auto& [i, j] : prs) {
        Q(i, j) += d;
        if (i != j) Q(j, i) += d;
      }
    }
    const PsdBlock& blk = p.blocks()[con.block];
    int k = blk.first_scalar;
    for (int i = 0; i < blk.size; ++i) {
      for (int j = i; j < blk.size; ++j, ++k) a.scalars[k] = Q(i, j);
    }
    a.residuals.push_back(gram_residual(val, Q, con.basis));
    a.min_eigs.push_back(sdp::min_eig(Q));
  }
  return a;
}

SosResult solve(const SosProgram& p, const SosSolveOptions& opts) {
  const CompiledProgram c = compile(p);
  SosResult r;
  r.raw = opts.backend ? opts.backend->solve(c.cp, opts.solver)
                       : sdp::solve(c.cp, opts.solver);
  r.status = r.raw.status;
  if (r.status == sdp::Status::kOptimal) {
    r.assignment = extract(p, c, r.raw);
  } else if (r.status == sdp::Status::kMaxIter ||
             r.status == sdp::Status::kNumericalFailure) {
    double bmax = 0.0;
    for (double v : c.cp.b) bmax = std::max(bmax, std::abs(v));
    const double scale = 1.0 + std::abs(r.raw.primal_objective) + std::abs(r.raw.dual_objective);
    const bool close = std::isfinite(r.raw.primal_residual) && !r.raw.x.empty() &&
                       r.raw.primal_residual <= opts.accept_tol * (1.0 + bmax) &&
                       std::abs(r.raw.primal_objective - r.raw.dual_objective) <=
                           opts.accept_tol * scale;
    if (close) {
      r.assignment = extract(p, c, r.raw);
      r.inexact = true;
    }
  }
  return r;
}

}  // namespace brs
