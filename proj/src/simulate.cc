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

#include "brs/simulate.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "brs/certify.h"

namespace brs {

State rk4(const VectorField& f, double t0, const State& x0, double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("rk4: steps must be positive");
  const std::size_t n = x0.size();
  const double h = (t1 - t0) / steps;
  State x = x0, k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    f(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    f(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    f(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    f(t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------

namespace {

// Uniform point in the unit ball of dimension n.
State unit_ball(SplitMix64& rng, int n) {
  State v(n);
  double norm = 0.0;
  for (auto& x : v) {
    const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
    x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  const double r = std::pow(rng.uniform(), 1.0 / n);
  for (auto& x : v) x = norm > 0.0 ? x / norm * r : 0.0;
  return v;
}

}  // namespace

Signal Signal::zero(int dim) {
  Signal s;
  s.dim_ = dim;
  return s;
}

Signal Signal::shaped_disturbance(const ProblemSpec& spec, std::uint64_t seed, double rate_hz,
                                  double amplitude) {
  Signal s = zero(spec.nw);
  if (!spec.w_active() || !spec.q) return s;
  s.kind_ = Kind::kPiecewiseRandom;
  s.t0_ = spec.t0;
  s.rate_ = rate_hz;
  s.seed_ = seed;
  s.amplitude_ = std::clamp(amplitude, 0.0, 1.0);
  s.clip_ = spec.wbar;
  s.shape_ = spec.budget_poly().diff(spec.t_index());
  return s;
}

Signal Signal::parameter(const ProblemSpec& spec, std::uint64_t seed, double rate_hz) {
  Signal s = zero(spec.nd);
  if (!spec.any_d_active()) return s;
  s.kind_ = Kind::kPiecewiseRandom;
  s.t0_ = spec.t0;
  s.rate_ = rate_hz;
  s.seed_ = seed;
  if (spec.delta_encoding == DeltaEncoding::kBall) {
    s.ball_ = spec.delta_bar;
  } else {
    s.box_.assign(spec.nd, 0.0);
    for (int i = 0; i < spec.nd; ++i) s.box_[i] = spec.d_active(i) ? spec.delta_bounds[i] : 0.0;
  }
  return s;
}

Signal Signal::samples(std::vector<double> times, std::vector<State> values) {
  if (times.empty() || times.size() != values.size()) {
    throw std::invalid_argument("signal samples: times and values must be non-empty and match");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("signal samples: times must increase");
    if (values[i].size() != values[0].size()) {
      throw std::invalid_argument("signal samples: inconsistent dimensions");
    }
  }
  Signal s = zero(static_cast<int>(values[0].size()));
  s.kind_ = Kind::kSamples;
  s.times_ = std::move(times);
  s.values_ = std::move(values);
  return s;
}

State Signal::operator()(double t) const {
  switch (kind_) {
    case Kind::kZero:
      return State(dim_, 0.0);
    case Kind::kSamples: {
      auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const std::size_t i = it == times_.begin() ? 0 : (it - times_.begin()) - 1;
      return values_[i];
    }
    case Kind::kPiecewiseRandom:
      break;
  }
  // Piece index; the small slack keeps grid points on piece boundaries in
  // the piece that starts there.
  const double pos = (t - t0_) * rate_ + 1e-9;
  const auto piece = static_cast<std::uint64_t>(std::max(0.0, std::floor(pos)));
  SplitMix64 rng(SplitMix64::substream(seed_, piece));
  State v(dim_, 0.0);
  if (shape_) {
    // Components uniform in [-1, 1], scaled so that |eta| <= 1.
    const double scale = amplitude_ / std::sqrt(static_cast<double>(std::max(dim_, 1)));
    std::vector<double> pt(shape_->vars().size(), 0.0);
    pt[0] = t;  // time is variable 0
    const double env = std::sqrt(std::max(0.0, shape_->eval(pt)));
    double norm = 0.0;
    for (auto& x : v) {
      x = env * scale * rng.uniform(-1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (clip_ > 0.0 && norm > clip_) {
      for (auto& x : v) x *= clip_ / norm;
    }
  } else if (ball_ >= 0.0) {
    v = unit_ball(rng, dim_);
    for (auto& x : v) x *= ball_;
  } else {
    for (int i = 0; i < dim_; ++i) v[i] = rng.uniform(-box_[i], box_[i]);
  }
  return v;
}

// ---------------------------------------------------------------------------

std::string Trace::to_text() const {
  std::ostringstream out;
  out.precision(12);
  const std::size_t n = x.empty() ? 0 : x[0].size();
  const std::size_t m = u.empty() ? 0 : u[0].size();
  const std::size_t nw = w.empty() ? 0 : w[0].size();
  const std::size_t nd = d.empty() ? 0 : d[0].size();
  out << "# t";
  for (std::size_t i = 0; i < n; ++i) out << " x" << i + 1;
  for (std::size_t i = 0; i < m; ++i) out << " u" << i + 1;
  for (std::size_t i = 0; i < nw; ++i) out << " w" << i + 1;
  for (std::size_t i = 0; i < nd; ++i) out << " d" << i + 1;
  out << " margin energy\n";
  out << "# saturated " << (saturated ? 1 : 0) << " events " << saturation_events << " exit "
      << (exit_time ? std::to_string(*exit_time) : std::string("none")) << " blew_up "
      << (blew_up ? 1 : 0) << " terminal_margin " << terminal_margin << "\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << t[k];
    for (double v : x[k]) out << ' ' << v;
    for (double v : u[k]) out << ' ' << v;
    for (double v : w[k]) out << ' ' << v;
    for (double v : d[k]) out << ' ' << v;
    out << ' ' << margin[k] << ' ' << energy[k] << "\n";
  }
  return out.str();
}

namespace {

struct ClosedLoop {
  const ProblemSpec& spec;
  std::vector<CompiledPolynomial> f;
  std::vector<std::vector<CompiledPolynomial>> g;
  std::vector<CompiledPolynomial> k;
  std::vector<std::pair<CompiledPolynomial, std::vector<CompiledPolynomial>>> rows;
  std::vector<CompiledPolynomial> tube;
  std::vector<CompiledPolynomial> terminal;

  ClosedLoop(const ProblemSpec& s, const Certificate& c) : spec(s) {
    if (static_cast<int>(c.k.size()) != s.m()) {
      throw CertificateError("certificate has " + std::to_string(c.k.size()) +
                             " feedback entries, expected " + std::to_string(s.m()));
    }
    for (int i = 0; i < s.n; ++i) {
      f.emplace_back(s.f[i]);
      g.emplace_back();
      for (const auto& gij : s.g[i]) g.back().emplace_back(gij);
    }
    for (const auto& kj : c.k) k.emplace_back(kj.rebase(s.vars));
    for (const auto& row : s.input_rows) {
      std::vector<CompiledPolynomial> a;
      for (const auto& aj : row.a) a.emplace_back(aj);
      rows.emplace_back(CompiledPolynomial(row.b), std::move(a));
    }
    for (const auto& term : s.tube) {
      (term.terminal_only ? terminal : tube).emplace_back(term.r);
    }
  }

  // Fills the point vector for (t, x, w, d).
  void point(double t, const State& x, const State& w, const State& d,
             std::vector<double>& pt) const {
    pt.assign(spec.vars.size(), 0.0);
    pt[spec.t_index()] = t;
    for (int i = 0; i < spec.n; ++i) pt[spec.x_index(i)] = x[i];
    for (int i = 0; i < spec.nw; ++i) pt[spec.w_index(i)] = w[i];
    for (int i = 0; i < spec.nd; ++i) pt[spec.d_index(i)] = d[i];
  }

  State input(const std::vector<double>& pt) const {
    State u(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) u[j] = k[j](pt);
    return u;
  }

  void field(const std::vector<double>& pt, const State& u, State& dx) const {
    dx.resize(spec.n);
    for (int i = 0; i < spec.n; ++i) {
      double v = f[i](pt);
      for (std::size_t j = 0; j < u.size(); ++j) v += g[i][j](pt) * u[j];
      dx[i] = v;
    }
  }
};

}  // namespace

Trace integrate(const ProblemSpec& spec, const Certificate& cert, const State& x0,
                const IntegrateOptions& opts) {
  if (static_cast<int>(x0.size()) != spec.n) {
    throw std::invalid_argument("integrate: x0 has " + std::to_string(x0.size()) +
                                " entries, expected " + std::to_string(spec.n));
  }
  for (double v : x0) {
    if (!std::isfinite(v)) throw std::invalid_argument("integrate: x0 is not finite");
  }
  const ClosedLoop cl(spec, cert);
  const Signal wz = Signal::zero(spec.nw), dz = Signal::zero(spec.nd);
  const Signal& wsig = opts.w ? *opts.w : wz;
  const Signal& dsig = opts.d ? *opts.d : dz;
  if (wsig.dim() != spec.nw || dsig.dim() != spec.nd) {
    throw std::invalid_argument("integrate: signal dimension does not match the problem");
  }

  const double ts = opts.t_start.value_or(spec.t0);
  const double span = spec.T - ts;
  const double dt_req = opts.dt > 0.0 ? opts.dt : (spec.T - spec.t0) / 2000.0;
  const int steps = span > 0.0 ? std::max(1, static_cast<int>(std::ceil(span / dt_req - 1e-9))) : 0;
  const double h = steps > 0 ? span / steps : 0.0;

  Trace tr;
  std::vector<double> pt;
  auto rhs = [&](double t, const State& x, State& dx) {
    cl.point(t, x, wsig(t), dsig(t), pt);
    cl.field(pt, cl.input(pt), dx);
  };
  auto record = [&](double t, const State& x) {
    const State w = wsig(t), d = dsig(t);
    cl.point(t, x, w, d, pt);
    const State u = cl.input(pt);
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& c : cl.tube) r = std::max(r, c(pt));
    bool sat = false;
    for (const auto& [b, a] : cl.rows) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) lhs += a[j](pt) * u[j];
      if (lhs > b(pt) + opts.input_tol) sat = true;
    }
    if (sat) {
      tr.saturated = true;
      ++tr.saturation_events;
    }
    if (!tr.exit_time && r > opts.tube_tol) tr.exit_time = t;
    double ww = 0.0;
    for (double v : w) ww += v * v;
    if (tr.t.empty()) {
      tr.energy.push_back(0.0);
    } else {
      double prev = 0.0;
      for (double v : tr.w.back()) prev += v * v;
      tr.energy.push_back(tr.energy.back() + 0.5 * (t - tr.t.back()) * (prev + ww));
    }
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.u.push_back(u);
    tr.w.push_back(w);
    tr.d.push_back(d);
    tr.margin.push_back(r);
  };

  State x = x0;
  record(ts, x);
  for (int s = 0; s < steps; ++s) {
    const double t = ts + s * h;
    x = rk4(rhs, t, x, t + h, 1);
    bool finite = true;
    for (double v : x) finite = finite && std::isfinite(v) && std::abs(v) < 1e12;
    if (!finite) {
      tr.blew_up = true;
      if (!tr.exit_time) tr.exit_time = t + h;
      return tr;
    }
    record(s + 1 == steps ? spec.T : t + h, x);
  }
  if (!cl.terminal.empty()) {
    cl.point(spec.T, x, wsig(spec.T), dsig(spec.T), pt);
    for (const auto& c : cl.terminal) tr.terminal_margin = std::max(tr.terminal_margin, c(pt));
    if (!tr.exit_time && tr.terminal_margin > opts.tube_tol) tr.exit_time = spec.T;
  }
  return tr;
}

// ---------------------------------------------------------------------------

std::string MonteCarloSummary::to_text() const {
  std::ostringstream out;
  out.precision(12);
  out << "runs " << n << "\nexits " << exits << "\nexit_fraction " << exit_fraction()
      << "\nsaturated " << saturated << "\nblowups " << blowups << "\nbudget_violations "
      << budget_violations << "\nworst_margin " << worst_margin << "\nworst_terminal_margin "
      << worst_terminal_margin << "\nsampling_attempts " << attempts << "\n";
  return out.str();
}

MonteCarloSummary monte_carlo(const ProblemSpec& spec, const Certificate& cert,
                              const MonteCarloOptions& opts) {
  if (opts.n < 1) throw std::invalid_argument("monte_carlo: n must be at least 1");
  const LevelSetSampler sampler(cert, spec, spec.t0);
  const Polynomial budget = spec.budget_poly();

  struct Run {
    bool sampled = false;
    State x0;
    bool exit = false, saturated = false, blew_up = false, overdrawn = false;
    double margin = -1e300, terminal = -1e300;
    long attempts = 0;
  };
  std::vector<Run> runs(opts.n);

  auto work = [&](int begin, int end) {
    std::vector<double> pt(spec.vars.size(), 0.0);
    for (int i = begin; i < end; ++i) {
      Run& r = runs[i];
      auto p = sampler.draw(opts.seed, static_cast<std::uint64_t>(i), &r.attempts);
      if (!p) return;
      r.sampled = true;
      r.x0 = p->x;
      const std::uint64_t ws = SplitMix64::substream(opts.seed ^ 0x5157ull, i);
      const std::uint64_t ds = SplitMix64::substream(opts.seed ^ 0xd417ull, i);
      const Signal w = opts.disturbed ? Signal::shaped_disturbance(spec, ws, opts.rate_hz)
                                      : Signal::zero(spec.nw);
      const Signal d = opts.disturbed ? Signal::parameter(spec, ds, opts.rate_hz)
                                      : Signal::zero(spec.nd);
      IntegrateOptions io;
      io.dt = opts.dt;
      io.w = &w;
      io.d = &d;
      const Trace tr = integrate(spec, cert, p->x, io);
      r.exit = !tr.in_tube();
      r.saturated = tr.saturated;
      r.blew_up = tr.blew_up;
      for (double m : tr.margin) r.margin = std::max(r.margin, m);
      r.terminal = tr.terminal_margin;
      for (std::size_t k = 0; k < tr.t.size(); ++k) {
        pt[spec.t_index()] = tr.t[k];
        if (tr.energy[k] > budget.eval(pt) + 1e-6) r.overdrawn = true;
      }
    }
  };

  const int workers = std::max(1, std::min(opts.workers, opts.n));
  if (workers == 1) {
    work(0, opts.n);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back(work, opts.n * w / workers, opts.n * (w + 1) / workers);
    }
    for (auto& t : threads) t.join();
  }

  MonteCarloSummary s;
  s.n = opts.n;
  for (const Run& r : runs) {
    s.attempts += r.attempts;
    if (!r.sampled) {
      throw SamplingError("monte_carlo: level-set sampler failed after " +
                          std::to_string(s.attempts) + " draws");
    }
    s.x0.push_back(r.x0);
    s.exits += r.exit;
    s.saturated += r.saturated;
    s.blowups += r.blew_up;
    s.budget_violations += r.overdrawn;
    s.worst_margin = std::max(s.worst_margin, r.margin);
    s.worst_terminal_margin = std::max(s.worst_terminal_margin, r.terminal);
  }
  return s;
}

// ---------------------------------------------------------------------------

double LevelSetGrid::value(const std::vector<int>& idx) const {
  std::size_t flat = 0, stride = 1;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    flat += idx[a] * stride;
    stride *= coords[a].size();
  }
  return values[flat];
}

std::vector<std::vector<double>> LevelSetGrid::crossings() const {
  std::vector<std::vector<double>> out;
  const std::size_t na = axes.size();
  std::vector<int> idx(na, 0);
  std::size_t total = 1;
  for (const auto& c : coords) total *= c.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = 0; a < na; ++a) {
      idx[a] = static_cast<int>(rem % coords[a].size());
      rem /= coords[a].size();
    }
    const double v0 = value(idx) - level;
    for (std::size_t a = 0; a < na; ++a) {
      if (idx[a] + 1 >= static_cast<int>(coords[a].size())) continue;
      std::vector<int> j = idx;
      ++j[a];
      const double v1 = value(j) - level;
      if ((v0 <= 0.0) == (v1 <= 0.0)) continue;
      const double s = v0 / (v0 - v1);
      std::vector<double> p(na);
      for (std::size_t b = 0; b < na; ++b) p[b] = coords[b][idx[b]];
      p[a] = coords[a][idx[a]] + s * (coords[a][idx[a] + 1] - coords[a][idx[a]]);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::string LevelSetGrid::to_text() const {
  std::ostringstream out;
  out.precision(12);
  out << "# level-set slice t " << t << " level " << level << " axes";
  for (int a : axes) out << " x" << a + 1;
  out << "\n";
  const std::size_t na = axes.size();
  std::size_t total = 1;
  for (const auto& c : coords) total *= c.size();
  std::vector<int> idx(na, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = 0; a < na; ++a) {
      idx[a] = static_cast<int>(rem % coords[a].size());
      rem /= coords[a].size();
    }
    if (flat > 0 && idx[0] == 0) out << "\n";
    for (std::size_t a = 0; a < na; ++a) out << coords[a][idx[a]] << ' ';
    out << values[flat] << "\n";
  }
  return out.str();
}

LevelSetGrid export_levelset(const Certificate& cert, const ProblemSpec& spec, double t,
                             const SliceSpec& slice) {
  const std::size_t na = slice.axes.size();
  if (na < 1 || na > 3) throw std::invalid_argument("export_levelset: 1 to 3 free axes");
  if (slice.lo.size() != na || slice.hi.size() != na) {
    throw std::invalid_argument("export_levelset: bounds must match the free axes");
  }
  if (slice.points < 2) throw std::invalid_argument("export_levelset: need at least 2 points");
  for (int a : slice.axes) {
    if (a < 0 || a >= spec.n) throw std::invalid_argument("export_levelset: axis out of range");
  }
  LevelSetGrid grid;
  grid.t = t;
  grid.level = certified_level(cert, spec, t);
  grid.axes = slice.axes;
  for (std::size_t a = 0; a < na; ++a) {
    std::vector<double> c(slice.points);
    for (int i = 0; i < slice.points; ++i) {
      c[i] = slice.lo[a] + (slice.hi[a] - slice.lo[a]) * i / (slice.points - 1);
    }
    grid.coords.push_back(std::move(c));
  }
  State base(spec.n, 0.0);
  for (int i = 0; i < spec.n; ++i) {
    if (static_cast<int>(slice.fixed.size()) == spec.n) {
      base[i] = slice.fixed[i];
    } else if (!spec.x_eq.empty()) {
      base[i] = spec.x_eq[i];
    }
  }
  const CompiledPolynomial V(cert.V.rebase(spec.vars));
  std::vector<double> pt(spec.vars.size(), 0.0);
  pt[spec.t_index()] = t;
  for (int i = 0; i < spec.n; ++i) pt[spec.x_index(i)] = base[i];
  std::size_t total = 1;
  for (const auto& c : grid.coords) total *= c.size();
  grid.values.resize(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = 0; a < na; ++a) {
      const std::size_t i = rem % grid.coords[a].size();
      rem /= grid.coords[a].size();
      pt[spec.x_index(slice.axes[a])] = grid.coords[a][i];
    }
    grid.values[flat] = V(pt);
  }
  return grid;
}

}  // namespace brs
