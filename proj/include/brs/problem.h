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

// Problem data for funnel synthesis: control-affine polynomial dynamics
//
//   x' = f(t, x, w, d) + g(t, x, w, d) u,
//
// a horizon [t0, T], a target tube, an input polytope A(t,x) u <= b(t,x),
// disturbance / uncertainty bounds and the template degrees used by the
// synthesis. Also the hand-editable text format for all of it.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "brs/polynomial.h"

namespace brs {

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One tube term r(t,x) <= 0. Terminal terms are only imposed at T.
struct TubeTerm {
  Polynomial r;
  bool terminal_only = false;
};

/// Row a(t,x) . u <= b(t,x) of the input polytope.
struct InputRow {
  std::vector<Polynomial> a;  // length m
  Polynomial b;
};

enum class DeltaEncoding { kBox, kBall };

/// Template degrees. A template of degree d with time degree dt holds every
/// monomial of total degree <= d whose exponent on t is <= dt. Multiplier
/// degrees are those of the SOS polynomial (its Gram basis has half).
struct TemplateDegrees {
  int V = 2;
  int V_t = 2;
  int k = 1;
  int k_t = 1;
  int s = 2;
  /// Per-family overrides of s, keyed "s1".."s11" or "sa".
  std::map<std::string, int> family;

  int multiplier(const std::string& fam) const {
    auto it = family.find(fam);
    return it == family.end() ? s : it->second;
  }
};

/// Which variable groups the feedback k may depend on.
struct KDependence {
  bool t = true;
  bool x = true;
  bool w = false;
  bool d = false;
};

struct ProblemSpec {
  std::string name;

  /// Ordered as t, states, disturbances w, uncertain parameters d.
  VarSet vars;
  int n = 0;
  int nw = 0;
  int nd = 0;
  std::vector<std::string> inputs;  // m names

  std::vector<Polynomial> f;               // n
  std::vector<std::vector<Polynomial>> g;  // n rows of m

  double t0 = 0.0;
  double T = 1.0;

  std::vector<TubeTerm> tube;
  std::vector<InputRow> input_rows;

  // L2 budget: integral of w'w over [t0, t] <= R^2 q(t).
  double R = 0.0;
  std::optional<Polynomial> q;
  double wbar = 0.0;  // pointwise |w| <= wbar; 0 disables the bound
  std::vector<double> delta_bounds;  // box half-widths, length nd
  DeltaEncoding delta_encoding = DeltaEncoding::kBox;
  double delta_bar = 0.0;            // ball radius when kBall

  double eps = 1e-4;
  TemplateDegrees degrees;
  KDependence k_dep;

  std::vector<double> x_eq;  // linearization point for the initial V
  std::vector<double> u_eq;
  std::optional<Polynomial> V0;  // over vars; overrides the LQR seed

  int m() const { return static_cast<int>(inputs.size()); }
  std::size_t t_index() const { return 0; }
  std::size_t x_index(int i) const { return 1 + i; }
  std::size_t w_index(int i) const { return 1 + n + i; }
  std::size_t d_index(int i) const { return 1 + n + nw + i; }

  /// h(t) = (t - t0)(T - t), nonnegative on the horizon.
  Polynomial horizon_poly() const;
  /// R^2 q(t), or 0 when there is no budget.
  Polynomial budget_poly() const;
  /// Disturbance channel participates (nw > 0 and R > 0).
  bool w_active() const { return nw > 0 && R > 0.0; }
  /// Uncertain component i participates.
  bool d_active(int i) const;
  bool any_d_active() const;
  bool robust() const { return w_active() || any_d_active(); }
};

/// Throws SpecError describing the first violated requirement.
void validate(const ProblemSpec& spec);

/// Text format, e.g.
///
///   name = toy
///   [variables]
///   states = x
///   inputs = u
///   [dynamics]
///   x' = u
///   [horizon]
///   t0 = 0
///   T = 1
///   [tube]
///   terminal: x^2 - 0.04
///   [inputs]
///   u <= 1
///   -u <= 1
///
/// Further sections: [uncertainty] (R, q, wbar, delta_bounds,
/// delta_encoding, delta_bar), [templates] (deg_V, deg_V_t, deg_k, deg_k_t,
/// deg_s, deg_<family>, k_depends), [options] (eps, x_eq, u_eq, V0).
std::string write_spec(const ProblemSpec& spec);
ProblemSpec parse_spec(std::string_view text);

/// FNV-1a 64 of write_spec(spec).
std::uint64_t spec_hash(const ProblemSpec& spec);
std::string hash_hex(std::uint64_t h);

/// Builds the ordered variable set t, states, w, d.
VarSet make_vars(const std::vector<std::string>& states,
                 const std::vector<std::string>& w,
                 const std::vector<std::string>& d);

/// Splits control-affine right-hand sides (over vars plus input names) into
/// f and g. Throws SpecError if some expression is not affine in the inputs.
void split_control_affine(ProblemSpec& spec, const std::vector<std::string>& rhs);

/// Monomials over `vars` (given by index). If `time` is listed, degree <= d
/// in the other variables times t^j for j <= dt; otherwise total degree <= d.
std::vector<Monomial> template_basis(const VarSet& vars,
                                     const std::vector<std::size_t>& var_indices,
                                     int d, int dt, std::optional<std::size_t> time);

}  // namespace brs
