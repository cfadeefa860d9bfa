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

// Sum-of-squares programs over polynomial decision variables, compiled to
// standard-form conic problems.
//
// Every decision scalar is owned by a named source (a template polynomial,
// a multiplier Gram matrix, a scalar such as gamma). Polynomials whose
// coefficients are affine in the decision scalars are AffinePoly values.
// Products of two AffinePoly values are only allowed when one side is a
// constant; anything else is a bilinear term and is rejected.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brs/polynomial.h"
#include "brs/sdp.h"

namespace brs {

class SosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a product would couple two decision-carrying operands.
class BilinearError : public SosError {
 public:
  using SosError::SosError;
};

/// Thrown when a Gram basis cannot represent a fixed term of an expression.
class BasisInsufficientError : public SosError {
 public:
  using SosError::SosError;
};

/// constant + sum_j coef[j] * scalar_j
struct LinExpr {
  double constant = 0.0;
  std::map<int, double> coef;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  static LinExpr var(int index, double scale = 1.0);

  bool is_constant() const { return coef.empty(); }
  LinExpr& add_scaled(const LinExpr& o, double s);
  LinExpr operator+(const LinExpr& o) const;
  LinExpr operator-(const LinExpr& o) const;
  LinExpr operator*(double s) const;
  LinExpr operator-() const { return *this * -1.0; }
  double eval(const std::vector<double>& values) const;
};

/// Names of the decision-scalar owners, shared between a program and the
/// AffinePoly values created from it (for diagnostics).
using OwnerTable = std::shared_ptr<std::vector<std::string>>;

/// Polynomial whose coefficients are LinExpr over decision scalars.
class AffinePoly {
 public:
  using TermMap = std::map<Monomial, LinExpr, GradedLexLess>;

  AffinePoly() = default;
  explicit AffinePoly(VarSet vars, OwnerTable owners = nullptr);
  AffinePoly(const Polynomial& p, OwnerTable owners = nullptr);  // NOLINT

  const VarSet& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  const OwnerTable& owners() const { return owners_; }
  bool is_constant() const;
  /// Fixed part (all decision scalars at zero).
  Polynomial constant_part() const;
  int degree() const;
  /// Monomials that can be nonzero for some decision values.
  std::vector<Monomial> support() const;
  /// Owner names of decision scalars appearing with nonzero coefficient.
  std::vector<std::string> owner_names() const;

  AffinePoly operator+(const AffinePoly& o) const;
  AffinePoly operator-(const AffinePoly& o) const;
  AffinePoly operator-() const;
  AffinePoly operator*(double s) const;
  AffinePoly operator*(const Polynomial& p) const;
  /// Throws BilinearError unless at least one side is constant.
  AffinePoly operator*(const AffinePoly& o) const;
  AffinePoly& operator+=(const AffinePoly& o);
  AffinePoly& operator-=(const AffinePoly& o);

  AffinePoly diff(std::size_t var) const;
  AffinePoly substitute(std::size_t var, const Polynomial& q) const;
  AffinePoly substitute(std::size_t var, double value) const;

  /// Adds `e` times monomial m.
  void add_term(const Monomial& m, const LinExpr& e, double scale = 1.0);
  /// Numeric polynomial at the given decision values.
  Polynomial eval(const std::vector<double>& values) const;

 private:
  void prune();
  void merge_owners(const AffinePoly& o);

  VarSet vars_;
  OwnerTable owners_;
  TermMap terms_;
};

AffinePoly operator*(const Polynomial& p, const AffinePoly& a);
AffinePoly operator*(double s, const AffinePoly& a);

/// Default Gram basis for an expression: monomials of degree at most
/// ceil(deg/2) in the variables present, restricted to half the per-variable
/// and total degree range of the support, then pruned of monomials whose
/// diagonal entry is forced to zero. The pruning never removes a monomial
/// that some admissible Gram decomposition could use.
std::vector<Monomial> default_gram_basis(const VarSet& vars,
                                         const std::vector<Monomial>& support);

/// Coefficient-matching data for p(x) == z(x)' Q z(x).
struct GramParametrization {
  std::vector<Monomial> basis;
  /// For every product monomial, the basis pairs (i <= j) that produce it.
  std::map<Monomial, std::vector<std::pair<int, int>>, GradedLexLess> pairs;
};

/// Builds the pair map for `basis` and checks that every fixed term of
/// `expr` is covered. Uncovered terms with decision dependence are returned
/// in `uncovered` (they must vanish). Throws BasisInsufficientError naming
/// a monomial whose fixed coefficient cannot be matched.
GramParametrization gram_parametrize(const AffinePoly& expr,
                                     const std::vector<Monomial>& basis,
                                     std::vector<Monomial>* uncovered = nullptr);

/// max |coefficient| of expr - z' Q z.
double gram_residual(const Polynomial& expr, const Eigen::MatrixXd& Q,
                     const std::vector<Monomial>& basis);

/// z' Q z as a polynomial.
Polynomial gram_polynomial(const VarSet& vars, const Eigen::MatrixXd& Q,
                           const std::vector<Monomial>& basis);

enum class ScalarKind { kFree, kNonneg, kPsd };

class SosProgram;
struct CompiledProgram;
CompiledProgram compile(const SosProgram& p);

struct SosConstraint {
  std::string name;
  AffinePoly expr;
  std::vector<Monomial> basis;
  int block = -1;  // PSD block index, -1 if the basis is empty
};

struct PsdBlock {
  std::string name;
  int size = 0;
  int first_scalar = 0;  // scalars for entries (i <= j), row-major
  std::vector<Monomial> basis;
};

class SosProgram {
 public:
  explicit SosProgram(VarSet vars);

  const VarSet& vars() const { return vars_; }
  const OwnerTable& owners() const { return owners_; }
  int num_scalars() const { return static_cast<int>(kinds_.size()); }
  ScalarKind kind(int scalar) const { return kinds_[scalar]; }

  /// New scalar decision variable.
  int add_scalar(const std::string& name, bool nonneg = false);
  AffinePoly scalar_poly(int scalar) const;

  /// Polynomial with one free coefficient per basis monomial.
  AffinePoly new_free_poly(const std::string& name, const std::vector<Monomial>& basis);
  /// z' Q z with Q a new PSD decision matrix over `half_basis`.
  AffinePoly new_sos_poly(const std::string& name, const std::vector<Monomial>& half_basis);

  /// Constrains expr to be SOS; basis defaults to default_gram_basis.
  int add_sos_constraint(const std::string& name, const AffinePoly& expr,
                         std::optional<std::vector<Monomial>> basis = std::nullopt);
  /// Requires every coefficient of expr to vanish.
  void add_zero_constraint(const AffinePoly& expr);
  void add_equality(const LinExpr& e);      // e == 0
  void add_nonnegative(const LinExpr& e);   // e >= 0
  void set_objective(const LinExpr& e) { objective_ = e; }  // minimized

  const std::vector<SosConstraint>& constraints() const { return constraints_; }
  const std::vector<PsdBlock>& blocks() const { return blocks_; }
  const LinExpr& objective() const { return objective_; }

 private:
  friend CompiledProgram compile(const SosProgram& p);
  int new_psd_block(const std::string& name, const std::vector<Monomial>& basis);
  void check_vars(const AffinePoly& e) const;

  VarSet vars_;
  OwnerTable owners_;
  std::vector<ScalarKind> kinds_;
  std::vector<int> scalar_block_;
  std::vector<SosConstraint> constraints_;
  std::vector<PsdBlock> blocks_;
  std::vector<LinExpr> equalities_;
  std::vector<LinExpr> inequalities_;
  LinExpr objective_;
};

struct CompiledProgram {
  sdp::ConicProblem cp;
  std::vector<int> column;  // conic column of each program scalar
};

/// Deterministic translation to a conic problem. Throws SosError on
/// inconsistent programs.
CompiledProgram compile(const SosProgram& p);

/// Values of a solved program.
struct Assignment {
  std::vector<double> scalars;
  std::vector<Eigen::MatrixXd> blocks;  // one per PsdBlock
  std::vector<double> residuals;        // per SOS constraint
  std::vector<double> min_eigs;         // per SOS constraint

  double value(const LinExpr& e) const { return e.eval(scalars); }
  Polynomial value(const AffinePoly& e) const { return e.eval(scalars); }
};

/// Pulls a solution back to program scalars. Constraint Gram matrices are
/// projected onto their coefficient-matching affine space, which removes
/// solver-level equality residuals. Throws SosError for infeasible or
/// unbounded statuses.
Assignment extract(const SosProgram& p, const CompiledProgram& c,
                   const sdp::ConicSolution& sol);

struct SosSolveOptions {
  sdp::SolverOptions solver;
  /// A stalled or capped solve whose primal residual and relative gap are
  /// below this bound is still extracted, flagged as inexact.
  double accept_tol = 1e-6;
  const sdp::ConicSolver* backend = nullptr;  // default: interior point
};

struct SosResult {
  sdp::Status status = sdp::Status::kNumericalFailure;
  bool inexact = false;
  sdp::ConicSolution raw;
  std::optional<Assignment> assignment;

  bool usable() const { return assignment.has_value(); }
};

/// compile + solve + extract.
SosResult solve(const SosProgram& p, const SosSolveOptions& opts = {});

}  // namespace brs
