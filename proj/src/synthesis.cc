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

#include "brs/synthesis.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "brs/certify.h"

namespace brs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void log(const SynthesisOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

int even_floor(int d) { return d <= 0 ? 0 : d - d % 2; }

std::vector<std::size_t> tx_indices(const ProblemSpec& s) {
  std::vector<std::size_t> out{s.t_index()};
  for (int i = 0; i < s.n; ++i) out.push_back(s.x_index(i));
  return out;
}

std::vector<std::size_t> x_indices(const ProblemSpec& s) {
  std::vector<std::size_t> out;
  for (int i = 0; i < s.n; ++i) out.push_back(s.x_index(i));
  return out;
}

// Variable groups that take part in a program: inactive disturbance and
// parameter channels are pinned to zero.
struct Channels {
  bool w = false;
  std::vector<bool> d;
  bool any_d = false;
};

Channels channels(const ProblemSpec& s, bool robust) {
  Channels c;
  c.d.assign(s.nd, false);
  if (!robust) return c;
  c.w = s.w_active();
  for (int i = 0; i < s.nd; ++i) {
    c.d[i] = s.d_active(i);
    c.any_d = c.any_d || c.d[i];
  }
  return c;
}

Polynomial pin_inactive(const ProblemSpec& s, const Channels& c, Polynomial p) {
  for (int i = 0; i < s.nw; ++i) {
    if (!c.w) p = p.substitute(s.w_index(i), 0.0);
  }
  for (int i = 0; i < s.nd; ++i) {
    if (!c.d[i]) p = p.substitute(s.d_index(i), 0.0);
  }
  return p;
}

std::vector<std::size_t> active_indices(const ProblemSpec& s, const Channels& c) {
  std::vector<std::size_t> out = tx_indices(s);
  if (c.w) {
    for (int i = 0; i < s.nw; ++i) out.push_back(s.w_index(i));
  }
  for (int i = 0; i < s.nd; ++i) {
    if (c.d[i]) out.push_back(s.d_index(i));
  }
  return out;
}

std::vector<std::size_t> k_indices(const ProblemSpec& s, const Channels& c) {
  std::vector<std::size_t> out;
  if (s.k_dep.t) out.push_back(s.t_index());
  if (s.k_dep.x) {
    for (int i = 0; i < s.n; ++i) out.push_back(s.x_index(i));
  }
  if (s.k_dep.w && c.w) {
    for (int i = 0; i < s.nw; ++i) out.push_back(s.w_index(i));
  }
  if (s.k_dep.d) {
    for (int i = 0; i < s.nd; ++i) {
      if (c.d[i]) out.push_back(s.d_index(i));
    }
  }
  return out;
}

std::vector<double> multinomial_weights(const std::vector<Monomial>& basis) {
  int D = 0;
  for (const auto& m : basis) D = std::max(D, m.degree());
  std::vector<double> w;
  w.reserve(basis.size());
  for (const auto& m : basis) {
    double v = std::tgamma(D + 1.0) / std::tgamma(D - m.degree() + 1.0);
    for (std::size_t i = 0; i < m.size(); ++i) v /= std::tgamma(m[i] + 1.0);
    w.push_back(v);
  }
  return w;
}

AffinePoly new_multiplier(BuiltProgram& bp, const std::string& name,
                          const std::vector<std::size_t>& vars, int degree, double offset = 0.0) {
  const auto half = template_basis(bp.prog.vars(), vars, even_floor(degree) / 2, 1 << 20,
                                   std::nullopt);
  AffinePoly p = bp.prog.new_sos_poly(name, half);
  const int block = static_cast<int>(bp.prog.blocks().size()) - 1;
  if (offset != 0.0) p = p + AffinePoly(Polynomial(bp.prog.vars(), offset));
  bp.multipliers.push_back({name, p, block, half, offset});
  return p;
}

void add_condition(BuiltProgram& bp, const std::string& name, const AffinePoly& expr,
                   bool with_margin) {
  BuiltProgram::Condition c;
  c.name = name;
  if (with_margin && bp.margin_cap) {
    auto basis = default_gram_basis(bp.prog.vars(), expr.support());
    c.weights = multinomial_weights(basis);
    Polynomial sigma(bp.prog.vars());
    for (std::size_t i = 0; i < basis.size(); ++i) {
      sigma += Polynomial::monomial(bp.prog.vars(), basis[i] * basis[i], c.weights[i]);
    }
    c.margin = bp.prog.add_scalar("margin:" + name, true);
    LinExpr cap(*bp.margin_cap);
    cap.add_scaled(LinExpr::var(c.margin), -1.0);
    bp.prog.add_nonnegative(cap);
    const AffinePoly e = expr - bp.prog.scalar_poly(c.margin) * sigma;
    c.index = bp.prog.add_sos_constraint(name, e, basis);
  } else {
    c.index = bp.prog.add_sos_constraint(name, expr);
  }
  bp.conditions.push_back(std::move(c));
}

// Shared body of the nominal and robust builders. With `robust` false every
// disturbance and parameter is pinned to zero and no robust term appears.
void build_conditions(BuiltProgram& bp, const ProblemSpec& s, const StepUnknowns& u,
                      double gamma, bool robust) {
  const VarSet& vars = bp.prog.vars();
  const Channels ch = channels(s, robust);
  const auto& deg = s.degrees;
  const auto all = active_indices(s, ch);
  const auto tx = tx_indices(s);
  const auto xs = x_indices(s);
  const int m = s.m();

  const Polynomial h = s.horizon_poly();
  const bool has_h = !h.is_zero();
  const Polynomial budget = robust ? s.budget_poly() : Polynomial(vars);
  const Polynomial level = budget + gamma;  // gamma + R^2 q(t)

  Polynomial ww(vars);
  if (ch.w) {
    for (int i = 0; i < s.nw; ++i) {
      const auto wi = Polynomial::variable(vars, vars.name(s.w_index(i)));
      ww += wi * wi;
    }
  }
  // Per-component (box) or single (ball) parameter bound terms d_j^2 - b_j^2.
  std::vector<Polynomial> d_terms;
  if (ch.any_d) {
    if (s.delta_encoding == DeltaEncoding::kBall) {
      Polynomial dd(vars);
      for (int i = 0; i < s.nd; ++i) {
        const auto di = Polynomial::variable(vars, vars.name(s.d_index(i)));
        dd += di * di;
      }
      d_terms.push_back(dd - s.delta_bar * s.delta_bar);
    } else {
      for (int i = 0; i < s.nd; ++i) {
        if (!ch.d[i]) continue;
        const auto di = Polynomial::variable(vars, vars.name(s.d_index(i)));
        d_terms.push_back(di * di - s.delta_bounds[i] * s.delta_bounds[i]);
      }
    }
  }
  const bool use_s8 = ch.w && s.wbar > 0.0;

  // Feedback.
  bp.V = u.V;
  if (u.k.empty()) {
    const auto kb = template_basis(vars, k_indices(s, ch), deg.k, deg.k_t, s.t_index());
    for (int j = 0; j < m; ++j) {
      bp.k.push_back(bp.prog.new_free_poly("k" + std::to_string(j + 1), kb));
    }
  } else {
    if (static_cast<int>(u.k.size()) != m) throw SynthesisError("k has the wrong length");
    bp.k = u.k;
  }
  const AffinePoly& V = bp.V;
  const AffinePoly Vlevel = V - AffinePoly(level);

  // Dissipation.
  {
    AffinePoly vdot = V.diff(s.t_index());
    for (int i = 0; i < s.n; ++i) {
      AffinePoly field(pin_inactive(s, ch, s.f[i]));
      for (int j = 0; j < m; ++j) field += pin_inactive(s, ch, s.g[i][j]) * bp.k[j];
      vdot += V.diff(s.x_index(i)) * field;
    }
    AffinePoly s3 = u.s3 ? *u.s3 : new_multiplier(bp, "s3", all, deg.multiplier("s3"));
    AffinePoly expr = -vdot + AffinePoly(ww) + s3 * Vlevel;
    if (has_h) expr -= new_multiplier(bp, "s2", all, deg.multiplier("s2")) * h;
    if (use_s8) {
      expr += new_multiplier(bp, "s8", all, deg.multiplier("s8")) * (ww - s.wbar * s.wbar);
    }
    if (d_terms.size() == 1 && s.delta_encoding == DeltaEncoding::kBall) {
      expr += new_multiplier(bp, "s9", all, deg.multiplier("s9")) * d_terms[0];
    } else {
      for (std::size_t j = 0; j < d_terms.size(); ++j) {
        expr += new_multiplier(bp, names::indexed("s9", static_cast<int>(j)), all,
                               deg.multiplier("s9")) *
                d_terms[j];
      }
    }
    add_condition(bp, names::kDissipation, expr, true);
  }

  // Tube terms imposed on the whole horizon, then terminal ones at T.
  int always = 0, terminal = 0;
  for (const auto& term : s.tube) {
    if (!term.terminal_only) {
      const int j = always++;
      const int d4 = std::min(even_floor(deg.multiplier("s4")),
                              even_floor(V.degree() - term.r.degree()));
      AffinePoly s4 = new_multiplier(bp, names::indexed("s4", j), tx, d4, s.eps);
      AffinePoly expr = -(s4 * term.r) + Vlevel;
      if (has_h) expr -= new_multiplier(bp, names::indexed("s7", j), tx, deg.multiplier("s7")) * h;
      add_condition(bp, names::tube(j), expr, true);
    } else {
      const int j = terminal++;
      const AffinePoly VT = V.substitute(s.t_index(), s.T);
      const Polynomial rT = term.r.substitute(s.t_index(), s.T);
      const double levelT = gamma + budget.substitute(s.t_index(), s.T).constant();
      const int da = std::min(even_floor(deg.multiplier("sa")),
                              even_floor(VT.degree() - rT.degree()));
      AffinePoly sa = new_multiplier(bp, names::indexed("sa", j), xs, da, s.eps);
      AffinePoly expr = -(sa * rT) + VT - AffinePoly(Polynomial(vars, levelT));
      add_condition(bp, names::terminal(j), expr, true);
    }
  }

  // Input limits.
  std::vector<std::size_t> row_vars = tx;
  if (s.k_dep.w && ch.w) {
    for (int i = 0; i < s.nw; ++i) row_vars.push_back(s.w_index(i));
  }
  if (s.k_dep.d) {
    for (int i = 0; i < s.nd; ++i) {
      if (ch.d[i]) row_vars.push_back(s.d_index(i));
    }
  }
  const bool k_sees_w = s.k_dep.w && ch.w && s.wbar > 0.0;
  const bool k_sees_d = s.k_dep.d && ch.any_d;
  if (u.s5 && u.s5->size() != s.input_rows.size()) throw SynthesisError("s5 has the wrong length");
  for (std::size_t i = 0; i < s.input_rows.size(); ++i) {
    const auto& row = s.input_rows[i];
    const int ii = static_cast<int>(i);
    AffinePoly ak(vars);
    for (int j = 0; j < m; ++j) ak += row.a[j] * bp.k[j];
    AffinePoly s5 = u.s5 ? (*u.s5)[i]
                         : new_multiplier(bp, names::indexed("s5", ii), row_vars,
                                          deg.multiplier("s5"));
    AffinePoly expr = AffinePoly(row.b) - ak + s5 * Vlevel;
    if (has_h) {
      expr -= new_multiplier(bp, names::indexed("s6", ii), row_vars, deg.multiplier("s6")) * h;
    }
    if (k_sees_w) {
      expr += new_multiplier(bp, names::indexed("s11", ii), row_vars, deg.multiplier("s11")) *
              (ww - s.wbar * s.wbar);
    }
    if (k_sees_d) {
      if (s.delta_encoding == DeltaEncoding::kBall) {
        expr += new_multiplier(bp, names::indexed("s10", ii), row_vars, deg.multiplier("s10")) *
                d_terms[0];
      } else {
        for (std::size_t j = 0; j < d_terms.size(); ++j) {
          expr += new_multiplier(bp, names::indexed("s10", ii, static_cast<int>(j)), row_vars,
                                 deg.multiplier("s10")) *
                  d_terms[j];
        }
      }
    }
    add_condition(bp, names::input(ii), expr, true);
  }
}

// ---------------------------------------------------------------------------

struct ProbeOutcome {
  enum Kind { kFeasible, kInfeasible, kAmbiguous } kind = kAmbiguous;
  std::optional<Certificate> cert;
  std::string why;
  double margin = 0.0;
};

Certificate to_certificate(const ProblemSpec& s, const BuiltProgram& bp, const Assignment& a,
                           double gamma) {
  Certificate c;
  c.spec_name = s.name;
  c.spec_text = write_spec(s);
  c.spec_hash = hash_hex(spec_hash(s));
  c.vars = s.vars;
  c.gamma = gamma;
  c.V = a.value(bp.V);
  for (const auto& k : bp.k) c.k.push_back(a.value(k));
  for (const auto& m : bp.multipliers) {
    GramForm f;
    f.name = m.name;
    f.basis = m.basis;
    f.offset = m.offset;
    f.Q = m.block >= 0 ? a.blocks[m.block] : Eigen::MatrixXd();
    c.multipliers.push_back(std::move(f));
  }
  for (const auto& cond : bp.conditions) {
    if (cond.name == "containment") continue;  // growth only, not certified
    const double mu = cond.margin >= 0 ? a.scalars[cond.margin] : 0.0;
    const auto& sc = bp.prog.constraints()[cond.index];
    GramForm f;
    f.name = cond.name;
    f.basis = sc.basis;
    f.Q = sc.block >= 0 ? a.blocks[sc.block] : Eigen::MatrixXd();
    for (std::size_t i = 0; i < cond.weights.size(); ++i) f.Q(i, i) += mu * cond.weights[i];
    c.constraints.push_back(std::move(f));
  }
  return c;
}

// A solver answer only counts as feasible when the extracted witness meets
// the certification tolerances.
bool witness_ok(const BuiltProgram& bp, const Assignment& a, const SynthesisOptions& o,
                std::string* why) {
  for (std::size_t i = 0; i < a.residuals.size(); ++i) {
    if (!(a.residuals[i] <= o.tol_res) || !(a.min_eigs[i] >= -o.tol_psd)) {
      *why = bp.prog.constraints()[i].name + " residual " + fmt(a.residuals[i]) + " min eig " +
             fmt(a.min_eigs[i]);
      return false;
    }
  }
  for (const auto& m : bp.multipliers) {
    if (m.block < 0) continue;
    const double e = sdp::min_eig(a.blocks[m.block]);
    if (!(e >= -o.tol_psd)) {
      *why = m.name + " min eig " + fmt(e);
      return false;
    }
  }
  return true;
}

ProbeOutcome run_program(const ProblemSpec& s, const BuiltProgram& bp, double gamma,
                         const SynthesisOptions& o, const SosSolveOptions& so) {
  ProbeOutcome out;
  SosResult r = solve(bp.prog, so);
  if (r.status == sdp::Status::kInfeasible) {
    out.kind = ProbeOutcome::kInfeasible;
    out.why = "infeasible";
    return out;
  }
  if (!r.usable()) {
    out.why = std::string("solver status ") + sdp::to_string(r.status);
    return out;
  }
  if (!witness_ok(bp, *r.assignment, o, &out.why)) return out;
  out.kind = ProbeOutcome::kFeasible;
  out.cert = to_certificate(s, bp, *r.assignment, gamma);
  // Smallest per-condition margin.
  bool any = false;
  for (const auto& cond : bp.conditions) {
    if (cond.margin < 0) continue;
    const double mu = r.assignment->scalars[cond.margin];
    out.margin = any ? std::min(out.margin, mu) : mu;
    any = true;
  }
  return out;
}

void build_for(BuiltProgram& bp, const ProblemSpec& s, const StepUnknowns& u, double gamma,
               const SynthesisOptions& o) {
  if (s.robust() || o.robust_path) {
    build_robust_constraints(bp, s, u, gamma);
  } else {
    build_nominal_constraints(bp, s, u, gamma);
  }
}

ProbeOutcome probe(const ProblemSpec& s, const Polynomial& V, double gamma,
                   const SynthesisOptions& o, const SosSolveOptions& so) {
  BuiltProgram bp(s.vars);
  StepUnknowns u{AffinePoly(V), {}, std::nullopt, std::nullopt};
  try {
    build_for(bp, s, u, gamma, o);
  } catch (const BasisInsufficientError& e) {
    // A fixed term no Gram matrix can produce: no decision values help.
    ProbeOutcome out;
    out.kind = ProbeOutcome::kInfeasible;
    out.why = e.what();
    return out;
  }
  return run_program(s, bp, gamma, o, so);
}

SosSolveOptions relaxed(const SosSolveOptions& so) {
  SosSolveOptions r = so;
  r.solver.feas_tol = std::max(so.solver.feas_tol, 1e-7);
  r.solver.gap_tol = std::max(so.solver.gap_tol, 1e-7);
  r.solver.max_iter = std::max(so.solver.max_iter, 200);
  r.accept_tol = std::max(so.accept_tol, 1e-6);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Monomial> v_template(const ProblemSpec& s) {
  return template_basis(s.vars, tx_indices(s), s.degrees.V, s.degrees.V_t, s.t_index());
}

std::vector<Monomial> k_template(const ProblemSpec& s) {
  return template_basis(s.vars, k_indices(s, channels(s, true)), s.degrees.k, s.degrees.k_t,
                        s.t_index());
}

void build_nominal_constraints(BuiltProgram& bp, const ProblemSpec& spec, const StepUnknowns& u,
                               double gamma) {
  build_conditions(bp, spec, u, gamma, false);
}

void build_robust_constraints(BuiltProgram& bp, const ProblemSpec& spec, const StepUnknowns& u,
                              double gamma) {
  build_conditions(bp, spec, u, gamma, true);
}

std::optional<Certificate> gamma_probe(const ProblemSpec& spec, const Polynomial& V, double gamma,
                                       const SynthesisOptions& opts, int* retries) {
  ProbeOutcome p = probe(spec, V, gamma, opts, opts.sos);
  if (p.kind == ProbeOutcome::kAmbiguous) {
    log(opts, "  probe " + fmt(gamma) + " ambiguous (" + p.why + "), retrying relaxed");
    if (retries) ++*retries;
    p = probe(spec, V, gamma, opts, relaxed(opts.sos));
    // Still unclear: treat as infeasible, which keeps the result sound.
  }
  if (p.kind == ProbeOutcome::kFeasible) return p.cert;
  return std::nullopt;
}

Certificate gamma_step(const ProblemSpec& spec, const Polynomial& V, double gamma_lo,
                       std::optional<double> gamma_hi, const SynthesisOptions& opts,
                       const Certificate* lo_witness, GammaStepInfo* info) {
  const auto start = Clock::now();
  GammaStepInfo local;
  GammaStepInfo& inf = info ? *info : local;
  inf = GammaStepInfo{};

  auto try_level = [&](double g) {
    ++inf.probes;
    auto c = gamma_probe(spec, V, g, opts, &inf.retries);
    log(opts, "  gamma " + fmt(g) + (c ? " feasible" : " infeasible"));
    return c;
  };

  double lo = gamma_lo;
  Certificate best;
  if (lo_witness) {
    best = *lo_witness;
    best.gamma = lo;
  } else {
    auto c = try_level(lo);
    if (!c) {
      throw SynthesisError("gamma step: level " + fmt(lo) +
                           " is infeasible for the given V (check V0 and the templates)");
    }
    best = std::move(*c);
  }

  const double cap = std::ldexp(1.0, 20) * std::abs(gamma_lo) + 1.0;
  double hi = std::numeric_limits<double>::infinity();
  if (gamma_hi) {
    hi = *gamma_hi;
  } else {
    double step = opts.bracket_step * std::max(std::abs(lo), 1e-12);
    for (;;) {
      const double cand = std::min(lo + step, cap);
      if (cand <= lo) break;
      auto c = try_level(cand);
      if (!c) {
        hi = cand;
        break;
      }
      lo = cand;
      best = std::move(*c);
      if (cand >= cap) break;
      step *= 2.0;
    }
  }
  while (std::isfinite(hi) && hi - lo > opts.tol_bisect * std::max(std::abs(lo), 1e-12)) {
    const double mid = 0.5 * (lo + hi);
    if (auto c = try_level(mid)) {
      lo = mid;
      best = std::move(*c);
    } else {
      hi = mid;
    }
  }
  inf.gamma_hi = hi;
  best.gamma = lo;
  // The last feasible level usually leaves no strict interior, which stalls
  // the V step. Step back a little (never below the starting level).
  const double back = std::max(gamma_lo, lo - opts.backoff * std::max(std::abs(lo), 1e-12));
  if (opts.backoff > 0.0 && back > gamma_lo && back < lo) {
    if (auto c = try_level(back)) {
      best = std::move(*c);
      best.gamma = back;
    }
  }
  inf.seconds = seconds_since(start);
  return best;
}

Certificate v_step(const ProblemSpec& spec, const Certificate& witness, const Polynomial& V_prev,
                   const SynthesisOptions& opts, VStepInfo* info) {
  const auto start = Clock::now();
  const double gamma = witness.gamma;
  const GramForm* s3 = witness.multiplier("s3");
  if (!s3) throw SynthesisError("v step: witness has no s3");
  for (std::size_t i = 0; i < spec.input_rows.size(); ++i) {
    if (!witness.multiplier(names::indexed("s5", static_cast<int>(i)))) {
      throw SynthesisError("v step: witness has no s5[" + std::to_string(i) + "]");
    }
  }

  auto attempt = [&](bool margins) {
    BuiltProgram bp(spec.vars);
    const VarSet& vars = bp.prog.vars();
    StepUnknowns u;
    u.V = bp.prog.new_free_poly("V", v_template(spec));
    for (const auto& k : witness.k) u.k.emplace_back(k);
    u.s3 = AffinePoly(s3->poly(vars));
    std::vector<AffinePoly> s5;
    for (std::size_t i = 0; i < spec.input_rows.size(); ++i) {
      s5.emplace_back(witness.multiplier(names::indexed("s5", static_cast<int>(i)))->poly(vars));
    }
    u.s5 = std::move(s5);
    if (margins) bp.margin_cap = opts.margin_cap;
    build_for(bp, spec, u, gamma, opts);

    // The t0 level set of V_prev stays inside the new one.
    {
      const AffinePoly V0 = bp.V.substitute(spec.t_index(), spec.t0);
      const Polynomial P0 = V_prev.substitute(spec.t_index(), spec.t0);
      const int d1 = std::min(even_floor(spec.degrees.multiplier("s1")),
                              even_floor(V0.degree() - P0.degree()));
      // s1 is not registered, so it stays out of the certificate.
      const auto half = template_basis(vars, x_indices(spec), d1 / 2, 1 << 20, std::nullopt);
      AffinePoly s1 = bp.prog.new_sos_poly("s1", half);
      AffinePoly expr = -(V0 - AffinePoly(Polynomial(vars, gamma))) + s1 * (P0 - gamma);
      add_condition(bp, "containment", expr, true);
    }
    // V + c at level gamma + c describes the same funnel; pin the value at
    // (t0, x_eq) so that gamma keeps measuring growth.
    {
      AffinePoly at = bp.V.substitute(spec.t_index(), spec.t0);
      std::vector<double> pt(vars.size(), 0.0);
      pt[spec.t_index()] = spec.t0;
      for (int i = 0; i < spec.n; ++i) {
        const double xe = spec.x_eq.empty() ? 0.0 : spec.x_eq[i];
        at = at.substitute(spec.x_index(i), xe);
        pt[spec.x_index(i)] = xe;
      }
      LinExpr e(-V_prev.eval(pt));
      for (const auto& [m, coef] : at.terms()) e.add_scaled(coef, 1.0);
      bp.prog.add_equality(e);
    }
    // Push every condition off the boundary as far as it will go.
    LinExpr objective;
    for (const auto& c : bp.conditions) {
      if (c.margin >= 0) objective.add_scaled(LinExpr::var(c.margin), -1.0);
    }
    bp.prog.set_objective(objective);

    ProbeOutcome p = run_program(spec, bp, gamma, opts, opts.sos);
    if (p.kind == ProbeOutcome::kAmbiguous) {
      p = run_program(spec, bp, gamma, opts, relaxed(opts.sos));
    }
    return p;
  };

  // Conditions that vanish identically somewhere (e.g. at the equilibrium)
  // admit no margin and leave the margin program without a strictly
  // feasible point. The zero-objective solve then stands in: the
  // interior-point path ends near the analytic center of the feasible set.
  ProbeOutcome p = attempt(true);
  if (p.kind != ProbeOutcome::kFeasible) {
    log(opts, "  V step: margin program failed (" + p.why + "), solving for feasibility");
    p = attempt(false);
  }
  if (p.kind != ProbeOutcome::kFeasible) {
    throw SynthesisError("v step failed at gamma " + fmt(gamma) + ": " + p.why);
  }
  Certificate c = std::move(*p.cert);
  // Fixed multipliers come from the witness.
  std::vector<GramForm> ms{*s3};
  for (std::size_t i = 0; i < spec.input_rows.size(); ++i) {
    ms.push_back(*witness.multiplier(names::indexed("s5", static_cast<int>(i))));
  }
  for (auto& m : c.multipliers) ms.push_back(std::move(m));
  c.multipliers = std::move(ms);
  c.gamma_history = witness.gamma_history;

  if (info) {
    info->seconds = seconds_since(start);
    info->margin = p.margin;
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

// Linearization at (t0, x_eq, w = 0, d = 0, u_eq).
void linearize(const ProblemSpec& s, Eigen::MatrixXd& A, Eigen::MatrixXd& B) {
  const int n = s.n, m = s.m();
  std::vector<double> pt(s.vars.size(), 0.0);
  pt[s.t_index()] = s.t0;
  for (int i = 0; i < n; ++i) pt[s.x_index(i)] = s.x_eq.empty() ? 0.0 : s.x_eq[i];
  A.setZero(n, n);
  B.setZero(n, m);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      double v = s.f[i].diff(s.x_index(l)).eval(pt);
      for (int j = 0; j < m; ++j) {
        const double ue = s.u_eq.empty() ? 0.0 : s.u_eq[j];
        v += s.g[i][j].diff(s.x_index(l)).eval(pt) * ue;
      }
      A(i, l) = v;
    }
    for (int j = 0; j < m; ++j) B(i, j) = s.g[i][j].eval(pt);
  }
}

// Stabilizing solution of A'P + PA - PBB'P + I = 0 from the stable
// invariant subspace of the Hamiltonian, or nullopt.
std::optional<Eigen::MatrixXd> care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -B * B.transpose(), -Eigen::MatrixXd::Identity(n, n), -A.transpose();
  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) return std::nullopt;
  Eigen::MatrixXcd X(2 * n, n);
  int cols = 0;
  for (int i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()[i].real() < -1e-9) {
      if (cols == n) return std::nullopt;
      X.col(cols++) = es.eigenvectors().col(i);
    }
  }
  if (cols != n) return std::nullopt;
  Eigen::MatrixXcd X1 = X.topRows(n), X2 = X.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
  if (!lu.isInvertible()) return std::nullopt;
  Eigen::MatrixXd P = (X2 * lu.inverse()).real();
  P = 0.5 * (P + P.transpose());
  const Eigen::MatrixXd res = A.transpose() * P + P * A - P * B * B.transpose() * P +
                              Eigen::MatrixXd::Identity(n, n);
  if (res.cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, P.cwiseAbs().maxCoeff())) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev(P);
  if (ev.eigenvalues().minCoeff() <= 0.0) return std::nullopt;
  return P;
}

// Distance from x_eq to the boundary of the tube (min over probe
// directions), used to size the first probe level.
double tube_radius(const ProblemSpec& s) {
  const int n = s.n;
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < n; ++i) {
    dirs.push_back(Eigen::VectorXd::Unit(n, i));
    dirs.push_back(-Eigen::VectorXd::Unit(n, i));
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 64; ++k) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = nd(rng);
    dirs.push_back(d.normalized());
  }
  std::vector<double> times{s.t0, 0.5 * (s.t0 + s.T), s.T};
  auto inside = [&](const Eigen::VectorXd& x) {
    std::vector<double> pt(s.vars.size(), 0.0);
    for (int i = 0; i < n; ++i) pt[s.x_index(i)] = x[i];
    for (const auto& term : s.tube) {
      if (term.terminal_only) {
        pt[s.t_index()] = s.T;
        if (term.r.eval(pt) > 0.0) return false;
      } else {
        for (double t : times) {
          pt[s.t_index()] = t;
          if (term.r.eval(pt) > 0.0) return false;
        }
      }
    }
    return true;
  };
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n && !s.x_eq.empty(); ++i) c[i] = s.x_eq[i];
  if (!inside(c)) throw SpecError(s.name + ": x_eq is not inside the target tube");
  double rho = 1e3;
  for (const auto& d : dirs) {
    double lo = 0.0, hi = 1e-3;
    while (hi < rho && inside(c + hi * d)) lo = hi, hi *= 2.0;
    if (hi >= rho && inside(c + rho * d)) continue;
    hi = std::min(hi, rho);
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      (inside(c + mid * d) ? lo : hi) = mid;
    }
    rho = std::min(rho, lo);
  }
  return rho;
}

Polynomial quadratic(const ProblemSpec& s, const Eigen::MatrixXd& P) {
  Polynomial V(s.vars);
  std::vector<Polynomial> e;
  for (int i = 0; i < s.n; ++i) {
    const double c = s.x_eq.empty() ? 0.0 : s.x_eq[i];
    e.push_back(Polynomial::variable(s.vars, s.vars.name(s.x_index(i))) - c);
  }
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      if (P(i, j) != 0.0) V += e[i] * e[j] * P(i, j);
    }
  }
  return V;
}

}  // namespace

Eigen::MatrixXd lqr_cost_matrix(const ProblemSpec& spec, bool* shifted) {
  Eigen::MatrixXd A, B;
  linearize(spec, A, B);
  if (shifted) *shifted = false;
  if (auto P = care(A, B)) return *P;
  if (shifted) *shifted = true;
  const Eigen::MatrixXd As = A - Eigen::MatrixXd::Identity(spec.n, spec.n);
  if (auto P = care(As, B)) return *P;
  throw SynthesisError(spec.name + ": no Riccati solution for the linearization");
}

Polynomial initialize_V0(const ProblemSpec& spec, const SynthesisOptions& opts, InitInfo* info) {
  InitInfo local;
  InitInfo& inf = info ? *info : local;
  inf = InitInfo{};

  Polynomial V0(spec.vars);
  const std::optional<Polynomial> given = opts.V0 ? opts.V0 : spec.V0;
  if (given) {
    V0 = given->rebase(spec.vars);
    if (opts.gamma0) {
      ++inf.attempts;
      if (auto c = gamma_probe(spec, V0, *opts.gamma0, opts)) {
        inf.gamma = *opts.gamma0;
        inf.witness = std::move(c);
        return V0;
      }
    }
  } else {
    V0 = quadratic(spec, lqr_cost_matrix(spec));
  }

  // Probe level: the quadratic part at x_eq, with the ellipse's longest
  // semi-axis at 5% of the tube radius.
  std::vector<double> pt(spec.vars.size(), 0.0);
  pt[spec.t_index()] = spec.t0;
  for (int i = 0; i < spec.n; ++i) pt[spec.x_index(i)] = spec.x_eq.empty() ? 0.0 : spec.x_eq[i];
  Eigen::MatrixXd Hs(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.n; ++j) {
      Hs(i, j) = 0.5 * V0.diff(spec.x_index(i)).diff(spec.x_index(j)).eval(pt);
    }
  }
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Hs).eigenvalues().minCoeff();
  if (!(lmin > 0.0)) throw SynthesisError(spec.name + ": V0 is not positive definite at x_eq");
  const double rho = tube_radius(spec);
  const double base = V0.eval(pt);
  const double g0 = lmin * std::pow(0.05 * rho, 2);

  for (int a = 0; a < 6; ++a) {
    const double scale = std::pow(10.0, a);
    const Polynomial V = V0 * scale;
    const double g = scale * (base + g0);
    ++inf.attempts;
    log(opts, "init: probing scale " + fmt(scale) + " at gamma " + fmt(g));
    if (auto c = gamma_probe(spec, V, g, opts)) {
      inf.gamma = g;
      inf.scale = scale;
      inf.witness = std::move(c);
      return V;
    }
  }
  throw SynthesisError(spec.name + ": no feasible initialization found (last probe at scale 1e5)");
}

SynthesisResult synthesize(const ProblemSpec& spec, const SynthesisOptions& opts) {
  validate(spec);
  SynthesisResult out;
  InitInfo init;
  auto t_init = Clock::now();
  Polynomial V = initialize_V0(spec, opts, &init);
  out.V0 = V;
  out.steps.push_back({"init", 0, seconds_since(t_init), init.gamma, init.attempts, 0.0});
  log(opts, "init: V0 feasible at gamma " + fmt(init.gamma));

  double gamma = init.gamma;
  Certificate lo_witness = *init.witness;
  std::optional<Certificate> last_good;
  std::vector<double> history;
  int stalls = 0;
  bool first = true;  // the first gamma step climbs from a tiny probe level

  for (int it = 1; it <= opts.iterations; ++it) {
    GammaStepInfo gi;
    SynthesisOptions go = opts;
    if (first) go.bracket_step = 1.0;
    Certificate gc;
    try {
      gc = gamma_step(spec, V, gamma, std::nullopt, go, &lo_witness, &gi);
    } catch (const std::exception& e) {
      out.status = std::string("warning: gamma step ") + std::to_string(it) + " failed: " + e.what();
      break;
    }
    const double prev = gamma;
    gamma = gc.gamma;
    history.push_back(gamma);
    gc.gamma_history = history;
    out.steps.push_back({"gamma", it, gi.seconds, gamma, gi.probes, 0.0});
    log(opts, "iteration " + std::to_string(it) + ": gamma " + fmt(gamma) + " (" +
                  std::to_string(gi.probes) + " probes, " + fmt(gi.seconds) + " s)");

    VStepInfo vi;
    Certificate vc;
    try {
      vc = v_step(spec, gc, V, opts, &vi);
    } catch (const std::exception& e) {
      out.status = std::string("warning: V step ") + std::to_string(it) + " failed: " + e.what();
      last_good = gc;
      break;
    }
    out.steps.push_back({"V", it, vi.seconds, gamma, 1, vi.margin});
    log(opts, "iteration " + std::to_string(it) + ": V step margin " + fmt(vi.margin) + " (" +
                  fmt(vi.seconds) + " s)");
    vc.gamma_history = history;
    last_good = vc;
    lo_witness = vc;
    V = vc.V;
    first = false;

    const double gain = (gamma - prev) / std::max(std::abs(prev), 1e-12);
    if (gain < opts.stall_tol) {
      if (++stalls >= opts.stall_count) {
        log(opts, "stalled after iteration " + std::to_string(it));
        break;
      }
    } else {
      stalls = 0;
    }
  }
  if (!last_good) {
    // Not even one step succeeded: fall back to the initial witness.
    last_good = *init.witness;
    last_good->gamma_history = history;
  }
  out.certificate = std::move(*last_good);
  out.certificate.tol_res = opts.tol_res;
  out.certificate.tol_psd = opts.tol_psd;

  // Re-check everything that is about to be emitted.
  const VerificationReport rep = check_algebraic(out.certificate, spec);
  if (rep.verdict != Verdict::kCertified) {
    out.status = "warning: emitted certificate failed the algebraic check: " + rep.summary();
  }
  if (out.status != "ok") out.certificate.status = out.status;
  return out;
}

}  // namespace brs
