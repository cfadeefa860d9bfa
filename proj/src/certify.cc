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

#include "brs/certify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "brs/sdp.h"
#include "brs/sos.h"

namespace brs {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kCertified: return "certified";
    case Verdict::kToleranceFail: return "tolerance-fail";
    case Verdict::kSampleFail: return "sample-fail";
  }
  return "?";
}

namespace {

std::string g(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Everything the conditions need, rebuilt from spec + certificate.
struct Pieces {
  const ProblemSpec& s;
  const Certificate& c;
  bool w = false;                 // disturbance channel active
  std::vector<bool> d;            // parameter component active
  bool any_d = false;
  std::vector<Polynomial> f;      // pinned
  std::vector<std::vector<Polynomial>> g;
  Polynomial budget;              // R^2 q(t) or 0
  Polynomial ww;
  std::vector<Polynomial> d_terms;
  Polynomial h;

  Pieces(const ProblemSpec& spec, const Certificate& cert)
      : s(spec), c(cert), budget(spec.vars), ww(spec.vars), h(spec.horizon_poly()) {
    const bool robust = spec.robust();
    w = robust && spec.w_active();
    d.assign(spec.nd, false);
    for (int i = 0; i < spec.nd; ++i) {
      d[i] = robust && spec.d_active(i);
      any_d = any_d || d[i];
    }
    auto pin = [&](Polynomial p) {
      for (int i = 0; i < spec.nw; ++i) {
        if (!w) p = p.substitute(spec.w_index(i), 0.0);
      }
      for (int i = 0; i < spec.nd; ++i) {
        if (!d[i]) p = p.substitute(spec.d_index(i), 0.0);
      }
      return p;
    };
    for (int i = 0; i < spec.n; ++i) {
      f.push_back(pin(spec.f[i]));
      g.emplace_back();
      for (const auto& gij : spec.g[i]) g.back().push_back(pin(gij));
    }
    if (w) {
      budget = spec.budget_poly();
      for (int i = 0; i < spec.nw; ++i) {
        const auto wi = Polynomial::variable(spec.vars, spec.vars.name(spec.w_index(i)));
        ww += wi * wi;
      }
    }
    if (any_d) {
      if (spec.delta_encoding == DeltaEncoding::kBall) {
        Polynomial dd(spec.vars);
        for (int i = 0; i < spec.nd; ++i) {
          const auto di = Polynomial::variable(spec.vars, spec.vars.name(spec.d_index(i)));
          dd += di * di;
        }
        d_terms.push_back(dd - spec.delta_bar * spec.delta_bar);
      } else {
        for (int i = 0; i < spec.nd; ++i) {
          if (!d[i]) continue;
          const auto di = Polynomial::variable(spec.vars, spec.vars.name(spec.d_index(i)));
          d_terms.push_back(di * di - spec.delta_bounds[i] * spec.delta_bounds[i]);
        }
      }
    }
  }

  Polynomial mult(const std::string& name) const {
    const GramForm* f = c.multiplier(name);
    if (!f) throw CertificateError("malformed certificate: missing multiplier " + name);
    return f->poly(s.vars);
  }

  Polynomial level() const { return budget + c.gamma; }
};

// Condition polynomials in the order they are stored.
std::vector<std::pair<std::string, Polynomial>> conditions(const Pieces& p) {
  const ProblemSpec& s = p.s;
  const Certificate& c = p.c;
  if (static_cast<int>(c.k.size()) != s.m()) {
    throw CertificateError("malformed certificate: k has " + std::to_string(c.k.size()) +
                           " entries, expected " + std::to_string(s.m()));
  }
  const Polynomial V = c.V.rebase(s.vars);
  const Polynomial Vl = V - p.level();
  const bool has_h = !p.h.is_zero();
  std::vector<std::pair<std::string, Polynomial>> out;

  Polynomial vdot = V.diff(s.t_index());
  for (int i = 0; i < s.n; ++i) {
    Polynomial field = p.f[i];
    for (int j = 0; j < s.m(); ++j) field += p.g[i][j] * c.k[j];
    vdot += V.diff(s.x_index(i)) * field;
  }
  Polynomial diss = -vdot + p.ww + p.mult("s3") * Vl;
  if (has_h) diss -= p.mult("s2") * p.h;
  if (p.w && s.wbar > 0.0) diss += p.mult("s8") * (p.ww - s.wbar * s.wbar);
  if (p.any_d && s.delta_encoding == DeltaEncoding::kBall) {
    diss += p.mult("s9") * p.d_terms[0];
  } else {
    for (std::size_t j = 0; j < p.d_terms.size(); ++j) {
      diss += p.mult(names::indexed("s9", static_cast<int>(j))) * p.d_terms[j];
    }
  }
  out.emplace_back(names::kDissipation, diss);

  int always = 0, terminal = 0;
  for (const auto& term : s.tube) {
    if (!term.terminal_only) {
      const int j = always++;
      Polynomial e = -(p.mult(names::indexed("s4", j)) * term.r) + Vl;
      if (has_h) e -= p.mult(names::indexed("s7", j)) * p.h;
      out.emplace_back(names::tube(j), e);
    } else {
      const int j = terminal++;
      const double lT = c.gamma + p.budget.substitute(s.t_index(), s.T).constant();
      Polynomial e = -(p.mult(names::indexed("sa", j)) * term.r.substitute(s.t_index(), s.T)) +
                     V.substitute(s.t_index(), s.T) - lT;
      out.emplace_back(names::terminal(j), e);
    }
  }

  const bool k_sees_w = s.k_dep.w && p.w && s.wbar > 0.0;
  const bool k_sees_d = s.k_dep.d && p.any_d;
  for (std::size_t i = 0; i < s.input_rows.size(); ++i) {
    const int ii = static_cast<int>(i);
    const auto& row = s.input_rows[i];
    Polynomial e = row.b;
    for (int j = 0; j < s.m(); ++j) e -= row.a[j] * c.k[j];
    e += p.mult(names::indexed("s5", ii)) * Vl;
    if (has_h) e -= p.mult(names::indexed("s6", ii)) * p.h;
    if (k_sees_w) e += p.mult(names::indexed("s11", ii)) * (p.ww - s.wbar * s.wbar);
    if (k_sees_d) {
      if (s.delta_encoding == DeltaEncoding::kBall) {
        e += p.mult(names::indexed("s10", ii)) * p.d_terms[0];
      } else {
        for (std::size_t j = 0; j < p.d_terms.size(); ++j) {
          e += p.mult(names::indexed("s10", ii, static_cast<int>(j))) * p.d_terms[j];
        }
      }
    }
    out.emplace_back(names::input(ii), e);
  }
  return out;
}

double safe_min_eig(const Eigen::MatrixXd& Q) {
  if (Q.size() == 0) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd S = 0.5 * (Q + Q.transpose());
  return sdp::min_eig(S);
}

void settle(VerificationReport& r) {
  bool alg = true;
  for (const auto& c : r.conditions) alg = alg && c.ok;
  for (const auto& c : r.multipliers) alg = alg && c.ok;
  bool samp = true;
  for (const auto& c : r.containments) samp = samp && c.violations == 0;
  r.verdict = !alg ? Verdict::kToleranceFail : (!samp ? Verdict::kSampleFail : Verdict::kCertified);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string VerificationReport::summary() const {
  for (const auto& c : conditions) {
    if (!c.ok) return "condition " + c.name + ": residual " + g(c.residual) + ", min eig " +
                      g(c.min_eig) + (c.note.empty() ? "" : " (" + c.note + ")");
  }
  for (const auto& c : multipliers) {
    if (!c.ok) return "multiplier " + c.name + ": min eig " + g(c.min_eig) +
                      (c.note.empty() ? "" : " (" + c.note + ")");
  }
  for (const auto& c : containments) {
    if (c.violations > 0) {
      return "containment " + c.name + ": " + std::to_string(c.violations) + "/" +
             std::to_string(c.samples) + " violations, worst " + g(c.worst_margin);
    }
  }
  return "certified";
}

std::string VerificationReport::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "verdict " << to_string(verdict) << "\n";
  for (const auto& c : conditions) {
    out << "condition " << c.name << " residual " << c.residual << " min_eig " << c.min_eig
        << (c.ok ? " ok" : " FAIL") << "\n";
  }
  for (const auto& c : multipliers) {
    out << "multiplier " << c.name << " min_eig " << c.min_eig << (c.ok ? " ok" : " FAIL")
        << "\n";
  }
  for (const auto& c : containments) {
    out << "containment " << c.name << " samples " << c.samples << " violations "
        << c.violations << " worst_margin " << c.worst_margin << "\n";
  }
  if (attempts > 0) {
    out << "sampling attempts " << attempts << " accepted " << accepted << " rate "
        << acceptance_rate() << "\n";
  }
  return out.str();
}

VerificationReport check_algebraic(const Certificate& cert, const ProblemSpec& spec,
                                   std::optional<double> tol_res, std::optional<double> tol_psd) {
  const double tr = tol_res.value_or(cert.tol_res);
  const double tp = tol_psd.value_or(cert.tol_psd);
  VerificationReport rep;
  const Pieces pieces(spec, cert);
  for (const auto& [name, expr] : conditions(pieces)) {
    AlgebraicCheck ch;
    ch.name = name;
    const GramForm* gf = cert.constraint(name);
    if (!gf) throw CertificateError("malformed certificate: missing Gram matrix for " + name);
    if (gf->Q.rows() != static_cast<Eigen::Index>(gf->basis.size()) ||
        gf->Q.cols() != gf->Q.rows()) {
      throw CertificateError("malformed certificate: Gram size mismatch for " + name);
    }
    ch.residual = gram_residual(expr, gf->Q, gf->basis);
    ch.min_eig = safe_min_eig(gf->Q);
    ch.ok = ch.residual <= tr && ch.min_eig >= -tp;
    rep.conditions.push_back(ch);
  }
  for (const auto& m : cert.multipliers) {
    AlgebraicCheck ch;
    ch.name = m.name;
    ch.min_eig = safe_min_eig(m.Q);
    ch.ok = ch.min_eig >= -tp;
    const bool needs_eps = m.name.rfind("s4[", 0) == 0 || m.name.rfind("sa[", 0) == 0;
    if (needs_eps && m.offset < spec.eps * (1.0 - 1e-12)) {
      ch.ok = false;
      ch.note = "offset " + g(m.offset) + " below eps " + g(spec.eps);
    }
    rep.multipliers.push_back(ch);
  }
  settle(rep);
  return rep;
}

// ---------------------------------------------------------------------------

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return (next() >> 11) * 0x1.0p-53; }

double SplitMix64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t SplitMix64::substream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 a(seed);
  const std::uint64_t base = a.next();
  SplitMix64 b(base ^ (index * 0xd1b54a32d192ed03ull + 0x632be59bd9b4e019ull));
  return b.next();
}

double certified_level(const Certificate& cert, const ProblemSpec& spec, double t) {
  if (!spec.robust() || !spec.w_active()) return cert.gamma;
  std::vector<double> pt(spec.vars.size(), 0.0);
  pt[spec.t_index()] = t;
  return cert.gamma + spec.budget_poly().eval(pt);
}

Box level_set_box(const Certificate& cert, const ProblemSpec& spec,
                  const std::vector<double>& times) {
  const int n = spec.n;
  const Polynomial V = cert.V.rebase(spec.vars);
  const CompiledPolynomial cV(V);
  std::vector<CompiledPolynomial> grad;
  for (int i = 0; i < n; ++i) grad.emplace_back(V.diff(spec.x_index(i)));

  std::vector<std::vector<double>> dirs;
  for (int i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
    e[i] = -1.0;
    dirs.push_back(e);
  }
  SplitMix64 rng(0x5eed);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> d(n);
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      // Box-Muller.
      const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
      d[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      norm += d[i] * d[i];
    }
    norm = std::sqrt(norm);
    for (auto& v : d) v /= norm;
    dirs.push_back(d);
  }

  Box box;
  box.lo.assign(n, std::numeric_limits<double>::infinity());
  box.hi.assign(n, -std::numeric_limits<double>::infinity());
  bool any = false;
  std::vector<double> pt(spec.vars.size(), 0.0);
  for (double t : times) {
    const double level = certified_level(cert, spec, t);
    pt[spec.t_index()] = t;
    // Interior point: x_eq, improved by gradient descent on V(t, .).
    std::vector<double> c(n, 0.0);
    for (int i = 0; i < n && !spec.x_eq.empty(); ++i) c[i] = spec.x_eq[i];
    auto value = [&](const std::vector<double>& x) {
      for (int i = 0; i < n; ++i) pt[spec.x_index(i)] = x[i];
      return cV(pt);
    };
    double vc = value(c);
    double step = 1e-2;
    for (int it = 0; it < 500 && vc > level; ++it) {
      for (int i = 0; i < n; ++i) pt[spec.x_index(i)] = c[i];
      std::vector<double> gr(n);
      double gn = 0.0;
      for (int i = 0; i < n; ++i) gr[i] = grad[i](pt), gn += gr[i] * gr[i];
      gn = std::sqrt(gn);
      if (gn == 0.0) break;
      std::vector<double> cand(n);
      for (int i = 0; i < n; ++i) cand[i] = c[i] - step * gr[i] / gn;
      const double vn = value(cand);
      if (vn < vc) {
        c = cand, vc = vn, step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    if (vc > level) continue;  // empty slice
    any = true;
    auto inside = [&](double s, const std::vector<double>& d) {
      std::vector<double> x(n);
      for (int i = 0; i < n; ++i) x[i] = c[i] + s * d[i];
      return value(x) <= level;
    };
    for (const auto& d : dirs) {
      double lo = 0.0, hi = 1e-3;
      while (inside(hi, d)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw SamplingError("certified level set appears unbounded");
      }
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (inside(mid, d) ? lo : hi) = mid;
      }
      // Look past the first crossing for re-entry (non-convex slices).
      for (int k = 1; k <= 60; ++k) {
        const double s = lo * (1.0 + k / 20.0);
        if (inside(s, d)) lo = s;
      }
      for (int i = 0; i < n; ++i) {
        box.lo[i] = std::min(box.lo[i], c[i] + lo * d[i]);
        box.hi[i] = std::max(box.hi[i], c[i] + lo * d[i]);
        box.lo[i] = std::min(box.lo[i], c[i]);
        box.hi[i] = std::max(box.hi[i], c[i]);
      }
    }
  }
  if (!any) throw SamplingError("certified level set is empty at every probed time");
  for (int i = 0; i < n; ++i) {
    const double mid = 0.5 * (box.lo[i] + box.hi[i]);
    const double half = 0.5 * (box.hi[i] - box.lo[i]) * 1.2 + 1e-9;
    box.lo[i] = mid - half;
    box.hi[i] = mid + half;
  }
  return box;
}

LevelSetSampler::LevelSetSampler(const Certificate& cert, const ProblemSpec& spec,
                                 std::optional<double> fixed_t, std::optional<Box> box)
    : cert_(cert),
      spec_(spec),
      fixed_t_(fixed_t),
      V_(cert.V.rebase(spec.vars)),
      budget_(spec.robust() && spec.w_active() ? spec.budget_poly() : Polynomial(spec.vars)) {
  if (box) {
    box_ = *box;
  } else {
    std::vector<double> times;
    if (fixed_t) {
      times.push_back(*fixed_t);
    } else {
      for (int i = 0; i <= 10; ++i) times.push_back(spec.t0 + (spec.T - spec.t0) * i / 10.0);
    }
    box_ = level_set_box(cert, spec, times);
  }
}

std::optional<LevelSetSampler::Point> LevelSetSampler::draw(std::uint64_t seed,
                                                            std::uint64_t index,
                                                            long* attempts) const {
  SplitMix64 rng(SplitMix64::substream(seed, index));
  std::vector<double> pt(spec_.vars.size(), 0.0);
  Point p;
  p.x.resize(spec_.n);
  for (int k = 0; k < 100000; ++k) {
    if (attempts) ++*attempts;
    p.t = fixed_t_ ? *fixed_t_ : rng.uniform(spec_.t0, spec_.T);
    pt[spec_.t_index()] = p.t;
    for (int i = 0; i < spec_.n; ++i) {
      p.x[i] = rng.uniform(box_.lo[i], box_.hi[i]);
      pt[spec_.x_index(i)] = p.x[i];
    }
    if (V_(pt) <= cert_.gamma + budget_(pt)) return p;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

struct Evaluators {
  CompiledPolynomial Vt;
  std::vector<CompiledPolynomial> Vx;
  std::vector<CompiledPolynomial> f;
  std::vector<std::vector<CompiledPolynomial>> g;
  std::vector<CompiledPolynomial> k;
  std::vector<std::pair<CompiledPolynomial, std::vector<CompiledPolynomial>>> rows;  // b, a
  std::vector<CompiledPolynomial> tube;      // always terms
  std::vector<CompiledPolynomial> terminal;  // terminal terms
};

struct Tally {
  std::vector<ContainmentCheck> checks;
  long attempts = 0;
  long accepted = 0;
  bool failed = false;

  void merge(const Tally& o) {
    for (std::size_t i = 0; i < checks.size(); ++i) {
      checks[i].samples += o.checks[i].samples;
      checks[i].violations += o.checks[i].violations;
      checks[i].worst_margin = std::max(checks[i].worst_margin, o.checks[i].worst_margin);
    }
    attempts += o.attempts;
    accepted += o.accepted;
    failed = failed || o.failed;
  }
};

void record(ContainmentCheck& c, double value, double margin) {
  ++c.samples;
  if (c.samples == 1 || value > c.worst_margin) c.worst_margin = value;
  if (value > margin) ++c.violations;
}

}  // namespace

VerificationReport check_containments(const Certificate& cert, const ProblemSpec& spec,
                                      const CertifyOptions& opts) {
  const Pieces pieces(spec, cert);
  const Polynomial V = cert.V.rebase(spec.vars);
  Evaluators ev;
  ev.Vt = CompiledPolynomial(V.diff(spec.t_index()));
  for (int i = 0; i < spec.n; ++i) {
    ev.Vx.emplace_back(V.diff(spec.x_index(i)));
    ev.f.emplace_back(pieces.f[i]);
    ev.g.emplace_back();
    for (const auto& gij : pieces.g[i]) ev.g.back().emplace_back(gij);
  }
  for (const auto& k : cert.k) ev.k.emplace_back(k.rebase(spec.vars));
  for (const auto& row : spec.input_rows) {
    std::vector<CompiledPolynomial> a;
    for (const auto& aj : row.a) a.emplace_back(aj);
    ev.rows.emplace_back(CompiledPolynomial(row.b), std::move(a));
  }
  for (const auto& term : spec.tube) {
    if (term.terminal_only) {
      ev.terminal.emplace_back(term.r);
    } else {
      ev.tube.emplace_back(term.r);
    }
  }

  std::vector<std::string> family;
  family.push_back(names::kDissipation);
  for (std::size_t i = 0; i < spec.input_rows.size(); ++i) {
    family.push_back(names::input(static_cast<int>(i)));
  }
  for (std::size_t j = 0; j < ev.tube.size(); ++j) family.push_back(names::tube(static_cast<int>(j)));
  const std::size_t first_terminal = family.size();
  for (std::size_t j = 0; j < ev.terminal.size(); ++j) {
    family.push_back(names::terminal(static_cast<int>(j)));
  }

  std::optional<Box> user_box;
  if (opts.box_lo && opts.box_hi) user_box = Box{*opts.box_lo, *opts.box_hi};
  const LevelSetSampler funnel(cert, spec, std::nullopt, user_box);
  std::optional<LevelSetSampler> final_slice;
  if (!ev.terminal.empty()) final_slice.emplace(cert, spec, spec.T, user_box);

  // Disturbance and parameter draws for one sample.
  auto draw_wd = [&](SplitMix64& rng, std::vector<double>& pt) {
    if (pieces.w && spec.wbar > 0.0) {
      // Uniform in the ball of radius wbar.
      std::vector<double> v(spec.nw);
      double norm = 0.0;
      for (auto& x : v) {
        const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
        x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      const double rad = spec.wbar * std::pow(rng.uniform(), 1.0 / spec.nw);
      for (int i = 0; i < spec.nw; ++i) pt[spec.w_index(i)] = norm > 0 ? v[i] / norm * rad : 0.0;
    }
    if (pieces.any_d) {
      if (spec.delta_encoding == DeltaEncoding::kBall) {
        std::vector<double> v(spec.nd);
        double norm = 0.0;
        for (auto& x : v) {
          const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
          x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
          norm += x * x;
        }
        norm = std::sqrt(norm);
        const double rad = spec.delta_bar * std::pow(rng.uniform(), 1.0 / spec.nd);
        for (int i = 0; i < spec.nd; ++i) pt[spec.d_index(i)] = norm > 0 ? v[i] / norm * rad : 0.0;
      } else {
        for (int i = 0; i < spec.nd; ++i) {
          const double b = pieces.d[i] ? spec.delta_bounds[i] : 0.0;
          pt[spec.d_index(i)] = rng.uniform(-b, b);
        }
      }
    }
  };

  const long n = std::max(1L, opts.samples);
  auto work = [&](long begin, long end, Tally& tally) {
    tally.checks.resize(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) tally.checks[i].name = family[i];
    std::vector<double> pt(spec.vars.size(), 0.0);
    for (long i = begin; i < end; ++i) {
      auto p = funnel.draw(opts.seed, static_cast<std::uint64_t>(i), &tally.attempts);
      if (!p) {
        tally.failed = true;
        return;
      }
      ++tally.accepted;
      std::fill(pt.begin(), pt.end(), 0.0);
      pt[spec.t_index()] = p->t;
      for (int j = 0; j < spec.n; ++j) pt[spec.x_index(j)] = p->x[j];
      SplitMix64 rng(SplitMix64::substream(opts.seed ^ 0xabcdefull, static_cast<std::uint64_t>(i)));
      draw_wd(rng, pt);

      std::vector<double> u(spec.m());
      for (int j = 0; j < spec.m(); ++j) u[j] = ev.k[j](pt);
      double vdot = ev.Vt(pt);
      for (int a = 0; a < spec.n; ++a) {
        double xd = ev.f[a](pt);
        for (int j = 0; j < spec.m(); ++j) xd += ev.g[a][j](pt) * u[j];
        vdot += ev.Vx[a](pt) * xd;
      }
      double ww = 0.0;
      if (pieces.w) {
        for (int j = 0; j < spec.nw; ++j) ww += pt[spec.w_index(j)] * pt[spec.w_index(j)];
      }
      std::size_t c = 0;
      record(tally.checks[c++], vdot - ww, opts.margin);
      for (const auto& [b, a] : ev.rows) {
        double lhs = 0.0;
        for (int j = 0; j < spec.m(); ++j) lhs += a[j](pt) * u[j];
        record(tally.checks[c++], lhs - b(pt), opts.margin);
      }
      for (const auto& r : ev.tube) record(tally.checks[c++], r(pt), opts.margin);

      if (final_slice) {
        auto q = final_slice->draw(opts.seed ^ 0x7e4d1ull, static_cast<std::uint64_t>(i),
                                   &tally.attempts);
        if (!q) {
          tally.failed = true;
          return;
        }
        std::fill(pt.begin(), pt.end(), 0.0);
        pt[spec.t_index()] = spec.T;
        for (int j = 0; j < spec.n; ++j) pt[spec.x_index(j)] = q->x[j];
        for (std::size_t j = 0; j < ev.terminal.size(); ++j) {
          record(tally.checks[first_terminal + j], ev.terminal[j](pt), opts.margin);
        }
      }
    }
  };

  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(n)));
  std::vector<Tally> parts(workers);
  if (workers == 1) {
    work(0, n, parts[0]);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      const long b = n * w / workers, e = n * (w + 1) / workers;
      threads.emplace_back(work, b, e, std::ref(parts[w]));
    }
    for (auto& t : threads) t.join();
  }
  Tally total = parts[0];
  for (int w = 1; w < workers; ++w) total.merge(parts[w]);

  VerificationReport rep;
  rep.containments = total.checks;
  rep.attempts = total.attempts;
  rep.accepted = total.accepted;
  if (total.failed || (rep.attempts >= 10000 && rep.acceptance_rate() < 1e-4)) {
    throw SamplingError("level-set sampler failed: acceptance rate " + g(rep.acceptance_rate()) +
                        " over " + std::to_string(rep.attempts) + " draws");
  }
  settle(rep);
  return rep;
}

VerificationReport certify(const Certificate& cert, const ProblemSpec& spec,
                           const CertifyOptions& opts) {
  VerificationReport a = check_algebraic(cert, spec, opts.tol_res, opts.tol_psd);
  VerificationReport b = check_containments(cert, spec, opts);
  a.containments = std::move(b.containments);
  a.attempts = b.attempts;
  a.accepted = b.accepted;
  settle(a);
  return a;
}

}  // namespace brs
