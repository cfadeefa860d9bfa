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

// Funnel synthesis by alternating search.
//
// The gamma step holds V fixed and bisects on the level gamma, searching the
// feedback k and all multipliers. The V step holds gamma, k and the
// multipliers that multiply V fixed, and searches V plus the remaining
// multipliers while pushing every condition away from the boundary of the
// SOS cone. A containment condition keeps the new level set at t0 a superset
// of the previous one, so the certified gamma never decreases.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "brs/certificate.h"
#include "brs/problem.h"
#include "brs/sos.h"

namespace brs {

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthesisOptions {
  int iterations = 5;
  /// Bisection stops when hi - lo <= tol_bisect * max(|lo|, 1e-12).
  double tol_bisect = 1e-4;
  /// The returned witness is re-solved at lo - backoff * |lo| so that the
  /// V step starts from a strictly feasible point.
  double backoff = 1e-4;
  /// First bracket step as a fraction of |gamma_lo| (doubled until infeasible).
  double bracket_step = 0.1;
  /// Early stop after `stall_count` consecutive relative gains below this.
  double stall_tol = 1e-4;
  int stall_count = 2;
  /// Upper bound on the V-step margin.
  double margin_cap = 1.0;
  /// Tolerances a witness must meet to count as feasible.
  double tol_res = 1e-6;
  double tol_psd = 1e-6;
  SosSolveOptions sos;
  /// Use the robust builder even when every robust channel is off.
  bool robust_path = false;
  /// Explicit V0; otherwise the problem's V0, otherwise LQR.
  std::optional<Polynomial> V0;
  /// Level to try first with an explicit V0 (e.g. the level it was certified at).
  std::optional<double> gamma0;
  std::function<void(const std::string&)> log;
};

/// Polynomials that one step holds fixed and the other searches.
struct StepUnknowns {
  AffinePoly V;
  std::vector<AffinePoly> k;                  // empty: new decision k over its template
  std::optional<AffinePoly> s3;               // unset: new decision multiplier
  std::optional<std::vector<AffinePoly>> s5;  // unset: new decision multipliers
};

/// An SOS program plus the bookkeeping needed to turn its solution into a
/// certificate.
struct BuiltProgram {
  struct Multiplier {
    std::string name;
    AffinePoly poly;
    int block = -1;  // PSD block, -1 if the multiplier is a constant offset only
    std::vector<Monomial> basis;
    double offset = 0.0;
  };
  struct Condition {
    std::string name;
    int index = -1;                // SOS constraint index
    std::vector<double> weights;   // margin weights on the Gram diagonal (empty: none)
    int margin = -1;               // scalar index of this condition's margin
  };

  SosProgram prog;
  AffinePoly V;
  std::vector<AffinePoly> k;
  std::vector<Multiplier> multipliers;
  std::vector<Condition> conditions;
  /// When set, every condition gets its own margin scalar in [0, cap].
  std::optional<double> margin_cap;

  explicit BuiltProgram(VarSet vars) : prog(std::move(vars)) {}
};

/// Conditions for the nominal problem: dissipation, tube / terminal
/// containment and input limits. Multipliers that do not multiply V are
/// created here as new SOS decision polynomials. Throws BilinearError if V
/// and k (or V and s3/s5) are both decision-carrying.
void build_nominal_constraints(BuiltProgram& bp, const ProblemSpec& spec,
                               const StepUnknowns& u, double gamma);

/// Same for systems with an L2 disturbance budget and bounded uncertain
/// parameters. With R = wbar = 0 and zero parameter bounds it emits exactly
/// the nominal conditions.
void build_robust_constraints(BuiltProgram& bp, const ProblemSpec& spec,
                              const StepUnknowns& u, double gamma);

struct GammaStepInfo {
  int probes = 0;
  int retries = 0;
  double seconds = 0.0;
  double gamma_hi = 0.0;  // smallest level found infeasible (inf if none)
};

/// Maximizes gamma for fixed V by bisection. If `lo_witness` is given,
/// gamma_lo is taken as feasible with that witness; otherwise gamma_lo is
/// probed first and SynthesisError is thrown if it is infeasible.
Certificate gamma_step(const ProblemSpec& spec, const Polynomial& V, double gamma_lo,
                       std::optional<double> gamma_hi, const SynthesisOptions& opts,
                       const Certificate* lo_witness = nullptr, GammaStepInfo* info = nullptr);

/// Single feasibility probe at a fixed gamma (no bisection).
std::optional<Certificate> gamma_probe(const ProblemSpec& spec, const Polynomial& V, double gamma,
                                       const SynthesisOptions& opts, int* retries = nullptr);

struct VStepInfo {
  double margin = 0.0;
  double seconds = 0.0;
};

/// Searches a new V at the level and feedback of `witness`, keeping the
/// t0 level set of V_prev inside the new one.
Certificate v_step(const ProblemSpec& spec, const Certificate& witness, const Polynomial& V_prev,
                   const SynthesisOptions& opts, VStepInfo* info = nullptr);

/// LQR Riccati solution for the linearization at (x_eq, u_eq). Falls back
/// to the shifted pair (A - I, B) when the pair is not stabilizable.
Eigen::MatrixXd lqr_cost_matrix(const ProblemSpec& spec, bool* shifted = nullptr);

struct InitInfo {
  double gamma = 0.0;  // feasible probe level
  double scale = 1.0;  // factor applied to the quadratic
  int attempts = 0;
  std::optional<Certificate> witness;
};

/// Quadratic seed V0 = (x - x_eq)' P (x - x_eq) with a feasible probe.
Polynomial initialize_V0(const ProblemSpec& spec, const SynthesisOptions& opts,
                         InitInfo* info = nullptr);

struct StepRecord {
  std::string step;  // "gamma" or "V"
  int iteration = 0;
  double seconds = 0.0;
  double gamma = 0.0;
  int probes = 0;
  double margin = 0.0;
};

struct SynthesisResult {
  Certificate certificate;
  std::vector<StepRecord> steps;
  std::string status = "ok";
  Polynomial V0{VarSet()};
};

SynthesisResult synthesize(const ProblemSpec& spec, const SynthesisOptions& opts = {});

/// Template monomials for V and k of a spec.
std::vector<Monomial> v_template(const ProblemSpec& spec);
std::vector<Monomial> k_template(const ProblemSpec& spec);

}  // namespace brs
