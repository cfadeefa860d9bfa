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

// End-to-end acceptance runs. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Long: several full synthesis runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "brs/certify.h"
#include "brs/models.h"
#include "brs/sdp.h"
#include "brs/simulate.h"
#include "brs/sos.h"
#include "brs/synthesis.h"

namespace brs {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a named check; the first failures are kept in the detail line.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void note(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

std::vector<double> point(const ProblemSpec& s, double t, const std::vector<double>& x) {
  std::vector<double> pt(s.vars.size(), 0.0);
  pt[s.t_index()] = t;
  for (int i = 0; i < s.n; ++i) pt[s.x_index(i)] = x[i];
  return pt;
}

// Largest |x| with V(t0, x) <= gamma for a scalar state, by a fine scan.
double toy_radius(const Certificate& c, const ProblemSpec& s) {
  const Polynomial V = c.V.rebase(s.vars);
  double r = 0.0;
  for (int i = -30000; i <= 30000; ++i) {
    const double x = i * 1e-4;
    if (V.eval(point(s, s.t0, {x})) <= c.gamma) r = std::max(r, std::abs(x));
  }
  return r;
}

// Shared synthesis runs, keyed by builtin name.
struct Run {
  ProblemSpec spec;
  SynthesisResult result;
  double seconds = 0.0;
};

SynthesisOptions run_options(int iterations) {
  SynthesisOptions o;
  o.iterations = iterations;
  // Run every requested iteration; the histories are the object under test.
  o.stall_count = iterations + 1;
  return o;
}

std::map<std::string, Run>& runs() {
  static std::map<std::string, Run> m;
  return m;
}

const Run& run(const std::string& name, int iterations = 4) {
  auto it = runs().find(name);
  if (it != runs().end()) return it->second;
  Run r;
  r.spec = models::builtin(name).spec;
  const auto t0 = Clock::now();
  r.result = synthesize(r.spec, run_options(iterations));
  r.seconds = since(t0);
  std::ostringstream h;
  for (double g : r.result.certificate.gamma_history) h << " " << fmt(g);
  note(name + ": " + fmt(r.seconds) + " s, status " + r.result.status + ", history" + h.str());
  return runs().emplace(name, std::move(r)).first->second;
}

bool nondecreasing(const std::vector<double>& h, double tol) {
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] < h[i - 1] - tol) return false;
  }
  return true;
}

// 1. Toy integrator against its closed-form reachable set.
Outcome toy_soundness() {
  Outcome o;
  const auto t0 = Clock::now();
  const ProblemSpec s = models::toy_integrator().spec;
  const SynthesisResult r = synthesize(s, run_options(10));
  const Certificate& c = r.certificate;
  const double rad = toy_radius(c, s);
  o.check(rad <= models::toy_brs_radius(1.0) + 1e-3, "certified radius " + fmt(rad) + " > 1.201");
  o.check(rad > 0.2, "certified radius " + fmt(rad) + " not above the target radius");

  MonteCarloOptions mo;
  mo.n = 100;
  mo.seed = 11;
  const MonteCarloSummary mc = monte_carlo(s, c, mo);
  // Re-simulate each start and read x(1) directly.
  int bad = 0;
  double worst = 0.0;
  for (const auto& x0 : mc.x0) {
    const Trace tr = integrate(s, c, x0);
    const double xT = std::abs(tr.x.back()[0]);
    worst = std::max(worst, xT);
    if (!(xT <= 0.2 + 1e-6) || tr.t.back() != s.T) ++bad;
  }
  o.check(static_cast<int>(mc.x0.size()) == 100, "sampled " + std::to_string(mc.x0.size()));
  o.check(bad == 0 && mc.exits == 0, std::to_string(bad) + " runs end outside |x| <= 0.2");
  const double sec = since(t0);
  o.check(sec < 60.0, "runtime " + fmt(sec) + " s");
  o.detail << "radius " << fmt(rad) << " (analytic 1.2), sqrt(gamma) " << fmt(std::sqrt(c.gamma))
           << ", max |x(1)| " << fmt(worst) << ", in target " << 100 - bad << "/100, "
           << fmt(sec) << " s";
  return o;
}

// 2. Monotone level histories, strict growth from the small quadratic seed.
Outcome monotone_growth() {
  Outcome o;
  for (const char* name : {"toy_integrator", "dubins"}) {
    const Run& r = run(name);
    const auto& h = r.result.certificate.gamma_history;
    const std::string n = name;
    o.check(h.size() >= 4, n + " history has " + std::to_string(h.size()) + " entries");
    o.check(nondecreasing(h, 1e-8), n + " history decreases");
    o.check(h.size() >= 3 && h[0] < h[1] && h[1] < h[2], n + " not strictly increasing");
    o.detail << n << " " << h.size() << " iterations " << fmt(h.front()) << " -> "
             << fmt(h.back()) << ", first steps";
    for (std::size_t i = 1; i < std::min<std::size_t>(h.size(), 3); ++i) {
      o.detail << " +" << fmt(h[i] - h[i - 1]);
    }
    o.detail << " (" << fmt(r.seconds) << " s); ";
  }
  const double dub = run("dubins").seconds;
  o.check(dub < 1200.0, "dubins runtime " + fmt(dub) + " s");
  return o;
}

// 3. Every shipped model certifies.
Outcome integrity() {
  Outcome o;
  for (const auto& name : models::builtin_names()) {
    if (name == "gtm") continue;  // no model data
    const Run& r = run(name);
    const VerificationReport rep = certify(r.result.certificate, r.spec);
    double worst_eig = 1e300, worst_res = 0.0;
    long samples = 0, viol = 0;
    for (const auto* group : {&rep.conditions, &rep.multipliers}) {
      for (const auto& c : *group) {
        worst_eig = std::min(worst_eig, c.min_eig);
        worst_res = std::max(worst_res, c.residual);
      }
    }
    bool full = true;
    for (const auto& c : rep.containments) {
      samples += c.samples;
      viol += c.violations;
      full = full && c.samples == 10000;
    }
    o.check(rep.verdict == Verdict::kCertified, name + ": " + rep.summary());
    o.check(worst_eig >= -1e-6, name + " min eig " + fmt(worst_eig));
    o.check(worst_res <= 1e-6, name + " residual " + fmt(worst_res));
    o.check(viol == 0, name + " " + std::to_string(viol) + " violations");
    o.check(full && !rep.containments.empty(), name + " sample count");
    o.detail << name << " eig " << fmt(worst_eig) << " res " << fmt(worst_res) << " viol "
             << viol << "/" << samples << "; ";
  }
  return o;
}

// 4. Dubins inputs stay in the box over the funnel.
Outcome saturation() {
  Outcome o;
  const Run& r = run("dubins");
  const Certificate& c = r.result.certificate;
  const ProblemSpec& s = r.spec;
  const LevelSetSampler sampler(c, s);
  std::vector<Polynomial> k;
  for (const auto& ki : c.k) k.push_back(ki.rebase(s.vars));
  long attempts = 0;
  int drawn = 0, outside = 0;
  double umax = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto p = sampler.draw(77, i, &attempts);
    if (!p) continue;
    ++drawn;
    const auto pt = point(s, p->t, p->x);
    for (const auto& ki : k) {
      const double u = ki.eval(pt);
      umax = std::max(umax, std::abs(u));
      if (!(std::abs(u) <= 1.0 + 1e-7)) ++outside;
    }
  }
  o.check(drawn == 10000, "sampler drew " + std::to_string(drawn));
  o.check(outside == 0, std::to_string(outside) + " inputs outside [-1, 1]");
  MonteCarloOptions mo;
  mo.n = 1000;
  mo.seed = 4;
  const MonteCarloSummary mc = monte_carlo(s, c, mo);
  o.check(mc.saturated == 0, std::to_string(mc.saturated) + " traces saturated");
  o.check(mc.exits == 0, std::to_string(mc.exits) + " traces left the tube");
  o.detail << "max |u| " << fmt(umax) << " over " << drawn << " samples; " << mc.n
           << " traces, " << mc.saturated << " saturated";
  return o;
}

// 5. The robust program with every channel off reproduces the nominal one.
Outcome robust_degeneracy() {
  Outcome o;
  models::ToyOptions to;
  to.disturbance = true;
  to.R = 0.0;
  to.wbar = 0.0;
  const ProblemSpec robust = models::toy_integrator(to).spec;
  const ProblemSpec nominal = models::toy_integrator().spec;
  SynthesisOptions opts = run_options(4);
  const SynthesisResult a = synthesize(nominal, opts);
  opts.robust_path = true;
  const SynthesisResult b = synthesize(robust, opts);
  const double d = std::abs(a.certificate.gamma - b.certificate.gamma);
  o.check(d <= 1e-6, "gamma differs by " + fmt(d));
  o.detail << "nominal " << fmt(a.certificate.gamma) << ", robust path "
           << fmt(b.certificate.gamma) << ", |diff| " << fmt(d);
  return o;
}

// 6. Disturbed toy: the funnel holds under budgeted disturbances, and an
// inflated certificate is caught.
Outcome robust_soundness() {
  Outcome o;
  const Run& r = run("toy_integrator_robust", 5);
  const ProblemSpec& s = r.spec;
  const Certificate& c = r.result.certificate;
  o.check(s.R == 0.1 && s.wbar == 0.141, "spec values");
  MonteCarloOptions mo;
  mo.n = 100;
  mo.seed = 6;
  const MonteCarloSummary mc = monte_carlo(s, c, mo);
  o.check(mc.n == 100 && mc.exits == 0, std::to_string(mc.exits) + " of 100 disturbed runs exit");
  o.check(mc.budget_violations == 0, "budget overdrawn");
  o.check(mc.blowups == 0, "blow-up");

  Certificate bad = c;
  bad.gamma = c.gamma * 25.0;
  const VerificationReport rep = certify(bad, s);
  o.check(rep.verdict != Verdict::kCertified, "inflated certificate passes certify");
  const MonteCarloSummary mb = monte_carlo(s, bad, mo);
  o.check(mb.exits > 0, "inflated certificate passes monte_carlo");
  o.detail << "gamma " << fmt(c.gamma) << ", disturbed exits " << mc.exits << "/100, worst terminal "
           << fmt(mc.worst_terminal_margin) << "; inflated x25: certify "
           << to_string(rep.verdict) << ", exits " << mb.exits << "/" << mb.n;
  return o;
}

// 7. Obstacle avoidance and the cost of the obstacle.
Outcome obstacle() {
  Outcome o;
  const Run& ro = run("dubins_obstacle");
  const ProblemSpec& s = ro.spec;
  const Certificate& c = ro.result.certificate;
  const Polynomial obs = models::dubins_obstacle(s.vars);
  const LevelSetSampler sampler(c, s, s.t0);
  long attempts = 0;
  int drawn = 0, hits = 0;
  double closest = 1e300;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto p = sampler.draw(91, i, &attempts);
    if (!p) continue;
    ++drawn;
    const Trace tr = integrate(s, c, p->x);
    bool hit = tr.blew_up;
    for (std::size_t j = 0; j < tr.t.size(); ++j) {
      const double v = obs.eval(point(s, tr.t[j], tr.x[j]));
      closest = std::min(closest, v);
      hit = hit || v <= 0.0;
    }
    hits += hit;
  }
  o.check(drawn == 10000, "sampler drew " + std::to_string(drawn));
  o.check(hits == 0, std::to_string(hits) + " trajectories reach the obstacle");

  // Levels of different V are not comparable; compare at a common V. The
  // first gamma step of both runs starts from the same quadratic seed, and
  // the obstacle-free problem is re-solved at the obstacle run's final V.
  const Run& rf = run("dubins");
  const double g_obs0 = c.gamma_history.front();
  const double g_free0 = rf.result.certificate.gamma_history.front();
  o.check(rf.result.V0 == ro.result.V0, "runs start from different seeds");
  o.check(g_free0 >= g_obs0 - 1e-8, "first step: free " + fmt(g_free0) + " < " + fmt(g_obs0));
  const Certificate g = gamma_step(rf.spec, c.V, c.gamma, std::nullopt, run_options(1));
  o.check(g.gamma >= c.gamma - 1e-8, "final V: free " + fmt(g.gamma) + " < " + fmt(c.gamma));
  o.detail << hits << "/" << drawn << " hit, min obs " << fmt(closest) << "; first step free "
           << fmt(g_free0) << " >= obstacle " << fmt(g_obs0) << "; at obstacle V free "
           << fmt(g.gamma) << " >= " << fmt(c.gamma) << " (final levels " << fmt(rf.result.certificate.gamma)
           << " vs " << fmt(c.gamma) << ", different V)";
  return o;
}

// 8. Pendubot coefficients as published.
Outcome pendubot_literals() {
  Outcome o;
  const ProblemSpec s = models::pendubot().spec;
  auto coeff = [&](const Polynomial& p, std::vector<int> e) {
    Monomial m(s.vars.size());
    for (std::size_t i = 0; i < e.size(); ++i) m.set(s.x_index(static_cast<int>(i)), e[i]);
    return p.coefficient(m);
  };
  const double g2 = coeff(s.g[1][0], {0, 0, 0, 0});
  const double f4 = coeff(s.f[3], {1, 0, 0, 0});
  o.check(g2 == 44.252, "g2 constant " + fmt(g2));
  o.check(f4 == -68.642, "f4 x1 coefficient " + fmt(f4));
  o.check(coeff(s.g[3][0], {0, 0, 0, 0}) == -83.912, "g4 constant");
  o.check(coeff(s.f[1], {3, 0, 0, 0}) == -10.656, "f2 x1^3 coefficient");
  o.check(coeff(s.g[1][0], {0, 0, 2, 0}) == -10.096, "g2 x3^2 coefficient");
  o.detail << "g2(0) = " << g2 << ", f4 x1 coefficient = " << f4;
  return o;
}

// 9. Building blocks: SOS round trip, Motzkin, weak duality, RK4 order.
Outcome primitives() {
  Outcome o;
  std::mt19937_64 rng(909);
  std::normal_distribution<double> N(0.0, 1.0);

  // SOS round trip: z'Qz for random PSD Q is recovered as SOS.
  const VarSet v({"x", "y"});
  const std::vector<std::size_t> xy{0, 1};
  int rt_ok = 0;
  double rt_worst = 0.0, rt_eig = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Monomial> all = monomial_basis(v, xy, 2);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::uniform_int_distribution<std::size_t>(1, all.size())(rng));
    std::sort(all.begin(), all.end(), GradedLexLess{});
    const int n = static_cast<int>(all.size());
    const int rank = trial % 2 ? std::max(1, n / 2) : n;
    Eigen::MatrixXd L = Eigen::MatrixXd::NullaryExpr(n, rank, [&]() { return N(rng); });
    const Polynomial p = gram_polynomial(v, L * L.transpose(), all);
    SosProgram prog(v);
    const int idx = prog.add_sos_constraint("rt", AffinePoly(p));
    const SosResult r = solve(prog);
    if (!r.usable()) continue;
    const auto& con = prog.constraints()[idx];
    // Independent residual from the returned Gram matrix.
    const double res = gram_residual(p, r.assignment->blocks[con.block], con.basis);
    const double eig = sdp::min_eig(r.assignment->blocks[con.block]);
    rt_worst = std::max(rt_worst, res);
    rt_eig = std::min(rt_eig, eig);
    // PSD to the same -1e-6 used for every certificate; rank-deficient
    // Grams sit on the cone boundary and come back within ~1e-8 of it.
    if (res < 1e-8 && eig >= -1e-6) ++rt_ok;
  }
  o.check(rt_ok == 100, "round trip " + std::to_string(rt_ok) + "/100");

  // Motzkin: nonnegative by AM-GM, not a sum of squares.
  SosProgram mz(v);
  mz.add_sos_constraint("motzkin",
                        AffinePoly(Polynomial::parse(v, "x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1")));
  const SosResult mres = solve(mz);
  o.check(mres.status == sdp::Status::kInfeasible,
          std::string("Motzkin status ") + sdp::to_string(mres.status));

  // Weak duality on every returned pair, recomputed from the vectors:
  // c'x >= b'y - 1e-6. Pairs reported optimal must also be feasible to
  // solver accuracy, which is what makes the inequality hold (c'x - b'y = s'x).
  int wd_ok = 0, n_opt = 0, opt_bad = 0, misclassified = 0;
  double wd_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    sdp::ConicProblem cp;
    cp.num_free = std::uniform_int_distribution<int>(0, 2)(rng);
    cp.num_nonneg = std::uniform_int_distribution<int>(0, 3)(rng);
    const int nb = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int k = 0; k < nb; ++k) cp.psd_sizes.push_back(std::uniform_int_distribution<int>(1, 4)(rng));
    const int n = cp.num_vars();
    const int m = std::max(1, n / 2);
    // Feasible by construction: b = A x0 with x0 interior; bounded since
    // c = A'y0 + s0 with s0 interior to the dual cone.
    std::vector<double> x0(n, 0.0), s0(n, 0.0);
    for (int j = 0; j < cp.num_free; ++j) x0[j] = N(rng);
    for (int l = 0; l < cp.num_nonneg; ++l) x0[cp.num_free + l] = s0[cp.num_free + l] = 1.0;
    for (int k = 0; k < nb; ++k) {
      const int sz = cp.psd_sizes[k];
      for (int i = 0; i < sz; ++i) {
        x0[cp.psd_offset(k) + sdp::ConicProblem::tri_index(sz, i, i)] = 1.0;
        s0[cp.psd_offset(k) + sdp::ConicProblem::tri_index(sz, i, i)] = 1.0;
      }
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(m, n, [&]() { return N(rng); });
    for (int j = 0; j < cp.num_free; ++j) s0[j] = 0.0;
    const Eigen::VectorXd y0 = Eigen::VectorXd::NullaryExpr(m, [&]() { return N(rng); });
    const Eigen::VectorXd b = A * Eigen::Map<Eigen::VectorXd>(x0.data(), n);
    const Eigen::VectorXd c = A.transpose() * y0 + Eigen::Map<Eigen::VectorXd>(s0.data(), n);
    cp.b.assign(b.data(), b.data() + m);
    cp.c.assign(c.data(), c.data() + n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) cp.A.push_back({i, j, A(i, j)});
    }
    const sdp::ConicSolution sol = sdp::solve(cp);
    const Eigen::Map<const Eigen::VectorXd> x(sol.x.data(), n), y(sol.y.data(), m);
    if (sol.status == sdp::Status::kInfeasible || sol.status == sdp::Status::kUnbounded) {
      ++misclassified;
      continue;
    }
    const double gap = c.dot(x) - b.dot(y);
    wd_worst = std::min(wd_worst, gap);
    if (gap >= -1e-6) ++wd_ok;
    if (sol.status != sdp::Status::kOptimal) {
      note("  sdp trial " + std::to_string(trial) + ": " + sdp::to_string(sol.status) +
           ", residuals " + fmt(sol.primal_residual) + " " + fmt(sol.dual_residual));
      continue;
    }
    ++n_opt;
    const Eigen::VectorXd s = c - A.transpose() * y;
    const double scale = 1.0 + c.norm() + b.norm();
    bool ok = (A * x - b).norm() <= 1e-6 * scale;
    for (int j = 0; j < cp.num_free; ++j) ok = ok && std::abs(s(j)) <= 1e-6 * scale;
    for (int l = 0; l < cp.num_nonneg; ++l) {
      ok = ok && x(cp.num_free + l) >= -1e-8 && s(cp.num_free + l) >= -1e-6 * scale;
    }
    for (int k = 0; k < nb; ++k) {
      const int sz = cp.psd_sizes[k];
      Eigen::MatrixXd S(sz, sz);
      for (int i = 0; i < sz; ++i) {
        for (int j = 0; j < sz; ++j) {
          const double e = s(cp.psd_offset(k) + sdp::ConicProblem::tri_index(sz, i, j));
          S(i, j) = i == j ? e : 0.5 * e;  // off-diagonal variables fold the pair
        }
      }
      ok = ok && sdp::min_eig(sdp::block_matrix(cp, sol.x, k)) >= -1e-8 &&
           sdp::min_eig(S) >= -1e-6 * scale;
    }
    if (!ok) ++opt_bad;
  }
  o.check(wd_ok == 100, "weak duality " + std::to_string(wd_ok) + "/100");
  o.check(opt_bad == 0, std::to_string(opt_bad) + " optimal pairs infeasible");
  o.check(misclassified == 0, std::to_string(misclassified) + " feasible SDPs misclassified");

  // RK4 on the harmonic oscillator x'' = -x: x(2) = cos 2.
  const VectorField f = [](double, const State& x, State& dx) { dx = {x[1], -x[0]}; };
  double prev = 0.0, fmin = 1e300, fmax = 0.0;
  for (int steps : {25, 50, 100, 200}) {
    const double err = std::abs(rk4(f, 0.0, {1.0, 0.0}, 2.0, steps)[0] - std::cos(2.0));
    if (prev > 0.0) {
      fmin = std::min(fmin, prev / err);
      fmax = std::max(fmax, prev / err);
    }
    prev = err;
  }
  o.check(fmin >= 8.0 && fmax <= 32.0, "RK4 factors " + fmt(fmin) + ".." + fmt(fmax));
  o.detail << "round trip " << rt_ok << "/100 (worst residual " << fmt(rt_worst)
           << ", min eig " << fmt(rt_eig) << "), Motzkin " << sdp::to_string(mres.status)
           << ", weak duality " << wd_ok << "/100 (" << n_opt << " optimal, min gap "
           << fmt(wd_worst) << "), RK4 factors " << fmt(fmin) << ".." << fmt(fmax);
  return o;
}

}  // namespace
}  // namespace brs

int main() {
  using namespace brs;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 toy soundness", toy_soundness},
      {"2 monotone growth", monotone_growth},
      {"3 certificate integrity", integrity},
      {"4 saturation", saturation},
      {"5 robust degeneracy", robust_degeneracy},
      {"6 robust soundness", robust_soundness},
      {"7 obstacle tube", obstacle},
      {"8 pendubot literals", pendubot_literals},
      {"9 primitives", primitives},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    std::fprintf(stderr, "running %s\n", name);
    std::string line;
    try {
      const Outcome o = fn();
      line = std::string(o.pass ? "PASS" : "FAIL") + " " + name + ": " + o.detail.str();
      failed += !o.pass;
    } catch (const std::exception& e) {
      line = std::string("FAIL ") + name + ": exception: " + e.what();
      ++failed;
    }
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
