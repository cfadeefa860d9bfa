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

// Closed-loop simulation of a certified controller, disturbance and
// parameter signal generators, Monte-Carlo validation of a funnel and
// level-set slices for plotting.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "brs/certificate.h"
#include "brs/problem.h"

namespace brs {

using State = std::vector<double>;

/// Right-hand side x' = F(t, x).
using VectorField = std::function<void(double t, const State& x, State& dx)>;

/// Classical fixed-step RK4 from t0 to t1 in `steps` steps.
State rk4(const VectorField& f, double t0, const State& x0, double t1, int steps);

// ---------------------------------------------------------------------------
// Signals.

/// A vector signal of time. `piecewise_random` reproduces the shaped
/// disturbance w(t) = R sqrt(q'(t)) eta(t), eta piecewise constant and
/// uniform, so that the energy released by time t is at most R^2 q(t).
class Signal {
 public:
  enum class Kind { kZero, kPiecewiseRandom, kSamples };

  /// Identically zero signal of dimension `dim`.
  static Signal zero(int dim);
  /// Budget-shaped disturbance for `spec` (dimension nw). `amplitude` in
  /// [0, 1] scales eta; values are clipped to norm wbar when wbar > 0.
  static Signal shaped_disturbance(const ProblemSpec& spec, std::uint64_t seed,
                                   double rate_hz = 50.0, double amplitude = 1.0);
  /// Parameter signal for `spec` (dimension nd), piecewise constant and
  /// uniform inside the box or ball.
  static Signal parameter(const ProblemSpec& spec, std::uint64_t seed, double rate_hz = 50.0);
  /// Zero-order hold through (times[i], values[i]); times increasing.
  static Signal samples(std::vector<double> times, std::vector<State> values);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  State operator()(double t) const;

 private:
  Kind kind_ = Kind::kZero;
  int dim_ = 0;
  double t0_ = 0.0;
  double rate_ = 50.0;
  std::uint64_t seed_ = 0;
  double amplitude_ = 1.0;
  double clip_ = 0.0;                   // 0: no clipping
  std::optional<Polynomial> shape_;     // R^2 q'(t), shaped disturbance only
  std::vector<double> box_;             // per-component bound, parameter box
  double ball_ = -1.0;                  // ball radius, parameter ball
  std::vector<double> times_;
  std::vector<State> values_;
};

// ---------------------------------------------------------------------------
// Traces.

struct Trace {
  std::vector<double> t;
  std::vector<State> x;
  std::vector<State> u;
  std::vector<State> w;
  std::vector<State> d;
  /// Largest always-tube value r(t, x(t)) per step (-inf without such terms).
  std::vector<double> margin;
  /// Largest terminal value r_T(x(T)) (-inf without terminal terms).
  double terminal_margin = -1e300;
  bool saturated = false;
  int saturation_events = 0;
  std::optional<double> exit_time;  // first time outside the tube
  bool blew_up = false;
  /// Trapezoidal integral of w'w at each grid time.
  std::vector<double> energy;

  bool in_tube() const { return !exit_time && !blew_up; }
  /// Columns: t, x..., u..., w..., d..., margin, energy.
  std::string to_text() const;
};

struct IntegrateOptions {
  double dt = 0.0;                 // 0: (T - t0) / 2000
  std::optional<double> t_start;   // default t0
  const Signal* w = nullptr;       // default zero
  const Signal* d = nullptr;       // default zero
  double tube_tol = 1e-6;          // r <= tol counts as inside
  double input_tol = 1e-7;         // A u <= b + tol counts as unsaturated
};

/// Integrates x' = f + g k(t, x[, w, d]) with RK4 up to T. Inputs are never
/// clamped; a limit violation only raises the saturation flag.
Trace integrate(const ProblemSpec& spec, const Certificate& cert, const State& x0,
                const IntegrateOptions& opts = {});

// ---------------------------------------------------------------------------
// Monte Carlo.

struct MonteCarloOptions {
  int n = 100;
  std::uint64_t seed = 1;
  double dt = 0.0;
  int workers = 1;
  /// Drive robust specs with shaped disturbances and random parameters.
  bool disturbed = true;
  double rate_hz = 50.0;
};

struct MonteCarloSummary {
  int n = 0;
  int exits = 0;
  int saturated = 0;
  int blowups = 0;
  int budget_violations = 0;  // signals that overdrew their energy budget
  double worst_margin = -1e300;           // max over traces of max r
  double worst_terminal_margin = -1e300;
  long attempts = 0;
  std::vector<State> x0;

  double exit_fraction() const { return n > 0 ? static_cast<double>(exits) / n : 0.0; }
  std::string to_text() const;
};

/// Simulates n closed-loop runs from states drawn uniformly from the
/// certified set at t0. Results do not depend on the worker count.
MonteCarloSummary monte_carlo(const ProblemSpec& spec, const Certificate& cert,
                              const MonteCarloOptions& opts = {});

// ---------------------------------------------------------------------------
// Level-set slices.

struct SliceSpec {
  std::vector<int> axes;            // free state indices (1 to 3)
  std::vector<double> lo, hi;       // per free axis
  int points = 101;                 // per free axis
  std::vector<double> fixed;        // full state; free entries ignored (default x_eq)
};

struct LevelSetGrid {
  double t = 0.0;
  double level = 0.0;
  std::vector<int> axes;
  std::vector<std::vector<double>> coords;  // per axis
  std::vector<double> values;               // V, first axis fastest

  double value(const std::vector<int>& idx) const;
  /// Points on grid edges where V crosses the level (linear interpolation).
  std::vector<std::vector<double>> crossings() const;
  /// gnuplot-style blocks: one "coords... V" row per node, blank line
  /// between scanlines; a header comment carries t and the level.
  std::string to_text() const;
};

LevelSetGrid export_levelset(const Certificate& cert, const ProblemSpec& spec, double t,
                             const SliceSpec& slice);

}  // namespace brs
