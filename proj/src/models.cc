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

#include "brs/models.h"

#include <cmath>

namespace brs::models {

namespace {

// Built-ins go through the same text parser as user files, so an exported
// built-in reads back to an identical spec.
NamedSpec from_text(const std::string& name, const std::string& text, TemplateDegrees reduced,
                    TemplateDegrees full, Preset preset) {
  NamedSpec ns;
  ns.name = name;
  ns.spec = parse_spec(text);
  ns.reduced = reduced;
  ns.full = full;
  ns.spec.degrees = preset == Preset::kFull ? full : reduced;
  validate(ns.spec);
  return ns;
}

TemplateDegrees degrees(int V, int V_t, int k, int k_t, int s) {
  TemplateDegrees d;
  d.V = V;
  d.V_t = V_t;
  d.k = k;
  d.k_t = k_t;
  d.s = s;
  return d;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

// ---------------------------------------------------------------------------

std::array<double, 3> dubins_from_car(double a, double b, double theta) {
  const double x2 = a * std::cos(theta) + b * std::sin(theta);
  const double c = a * std::sin(theta) - b * std::cos(theta);
  // Sign chosen so that x3' = x2 u1 - x1 u2 (see notes in the README).
  return {theta, x2, 2.0 * c - theta * x2};
}

std::array<double, 2> dubins_inputs_from_car(double a, double b, double theta, double omega,
                                             double v) {
  const double c = a * std::sin(theta) - b * std::cos(theta);
  return {omega, v - omega * c};
}

Polynomial dubins_obstacle(const VarSet& vars) {
  return Polynomial::parse(vars, "(x1 - 1.5)^2 + x2^2 + x3^2 - 0.25");
}

NamedSpec dubins(const DubinsOptions& opts) {
  std::string text = R"(name = )";
  text += opts.obstacle ? "dubins_obstacle" : "dubins";
  text += R"(
[variables]
states = x1 x2 x3
inputs = u1 u2
[dynamics]
x1' = u1
x2' = u2
x3' = x2*u1 - x1*u2
[horizon]
t0 = 0
T = 4
[tube]
terminal: x1^2 + x2^2 + x3^2 - 0.04
)";
  if (opts.obstacle) text += "always: -((x1 - 1.5)^2 + x2^2 + x3^2 - 0.25)\n";
  text += R"([inputs]
u1 <= 1
-u1 <= 1
u2 <= 1
-u2 <= 1
[options]
eps = 0.001
x_eq = 0 0 0
u_eq = 0 0
)";
  NamedSpec ns = from_text(opts.obstacle ? "dubins_obstacle" : "dubins", text,
                           degrees(2, 2, 2, 1, 2), degrees(6, 6, 2, 2, 2), opts.preset);
  ns.notes =
      "Dubins car in polynomial coordinates x1 = theta, x2 = a cos(theta) + b sin(theta), "
      "x3 = 2(a sin(theta) - b cos(theta)) - theta x2; u1 = omega, "
      "u2 = v - omega (a sin(theta) - b cos(theta)).";
  if (opts.obstacle) ns.notes += " Tube excludes the ball (x1-1.5)^2 + x2^2 + x3^2 <= 0.25.";
  ns.x0 = {-0.8, 1.4, 0.3};
  return ns;
}

NamedSpec pendubot(Preset preset) {
  const std::string text = R"(name = pendubot
[variables]
states = x1 x2 x3 x4
inputs = u
[dynamics]
x1' = x2
x2' = -10.656*x1^3 + 11.531*x1^2*x3 + 7.885*x1*x3^2 + 0.797*x2^2*x3 + 0.841*x2*x3*x4 + 21.049*x3^3 + 0.420*x3*x4^2 + 66.523*x1 - 24.511*x3 + (-10.096*x3^2 + 44.252)*u
x3' = x4
x4' = 10.996*x1^3 - 48.915*x1^2*x3 - 6.404*x1*x3^2 - 2.396*x2^2*x3 - 1.594*x2*x3*x4 - 51.909*x3^3 - 0.797*x3*x4^2 - 68.642*x1 + 103.978*x3 + (37.802*x3^2 - 83.912)*u
[horizon]
t0 = 0
T = 4
[tube]
terminal: x1^2/0.01 + x2^2/0.1225 + x3^2/0.01 + x4^2/0.1225 - 1
[inputs]
u <= 1
-u <= 1
[options]
eps = 0.0001
x_eq = 0 0 0 0
u_eq = 0
)";
  NamedSpec ns = from_text("pendubot", text, degrees(2, 2, 1, 1, 2), degrees(4, 4, 4, 4, 4),
                           preset);
  ns.notes = "Pendubot about the upright equilibrium; cubic model with literal coefficients.";
  ns.x0 = {-0.35, 2.6, 0.35, -4.0};
  return ns;
}

NamedSpec pursuer_evader(const PursuerOptions& opts) {
  const bool with_cos = opts.cos_error_bound > 0.0;
  std::string text = "name = ";
  text += with_cos ? "pursuer_evader" : "pursuer_evader_nominal";
  text += R"(
[variables]
states = x1 x2 x3
inputs = up
)";
  text += with_cos ? "parameters = ue dc\n" : "parameters = ue\n";
  text += R"([dynamics]
x1' = -1 + (1 - 0.4298*x3^2)";
  text += with_cos ? " + dc" : "";
  text += R"() + ue*x2
x2' = (-0.1511*x3^3 + x3) - ue*x1
x3' = up - ue
[horizon]
t0 = 0
T = 2.6
[tube]
)";
  text += opts.target == PursuerTarget::kBall ? "terminal: x1^2 + x2^2 + x3^2 - 1\n"
                                              : "terminal: x1^2 + x2^2 - 1\n";
  text += R"([inputs]
up <= 1
-up <= 1
[uncertainty]
R = 0
wbar = 0
)";
  if (opts.encoding == DeltaEncoding::kBox) {
    text += "delta_encoding = box\ndelta_bounds = 0.5";
    if (with_cos) text += " " + fmt(opts.cos_error_bound);
    text += "\n";
  } else {
    const double bar = std::sqrt(0.25 + opts.cos_error_bound * opts.cos_error_bound);
    text += "delta_encoding = ball\ndelta_bar = " + fmt(bar) + "\n";
  }
  // The evader's turn rate never vanishes, so no fixed set around the origin
  // is invariant and the LQR seed is infeasible. The seed below grows in
  // time instead; cubic feedback lets it approximate a saturated turn.
  text += R"([options]
eps = 0.0001
x_eq = 0 0 0
u_eq = 0
V0 = x1^2 + x2^2 + x2*x3 + 2*x3^2 - 0.2*t
)";
  NamedSpec ns = from_text(with_cos ? "pursuer_evader" : "pursuer_evader_nominal", text,
                           degrees(2, 2, 3, 1, 2), degrees(6, 6, 3, 2, 2), opts.preset);
  ns.notes =
      "Pursuer-evader game in the evader frame, v_e = v_p = 1; evader turn rate in [-0.5, 0.5] "
      "and the cosine fit error are treated as bounded uncertain parameters.";
  ns.x0 = {0.5, 0.5, 0.0};
  return ns;
}

double toy_brs_radius(double T) { return 0.2 + T; }

NamedSpec toy_integrator(const ToyOptions& opts) {
  std::string text = "name = ";
  text += opts.disturbance ? "toy_integrator_robust" : "toy_integrator";
  text += R"(
[variables]
states = x
inputs = u
)";
  if (opts.disturbance) text += "disturbances = w\n";
  text += "[dynamics]\n";
  text += opts.disturbance ? "x' = u + w\n" : "x' = u\n";
  text += "[horizon]\nt0 = 0\nT = " + fmt(opts.T) + "\n";
  text += R"([tube]
terminal: x^2 - 0.04
[inputs]
u <= 1
-u <= 1
)";
  if (opts.disturbance) {
    text += "[uncertainty]\nR = " + fmt(opts.R) + "\nwbar = " + fmt(opts.wbar) + "\n";
    if (opts.T > 0.0) text += "q = t^2/" + fmt(opts.T * opts.T) + "\n";
  }
  text += "[options]\neps = 0.0001\nx_eq = 0\nu_eq = 0\n";
  NamedSpec ns = from_text(opts.disturbance ? "toy_integrator_robust" : "toy_integrator", text,
                           degrees(2, 2, 3, 2, 2), degrees(4, 4, 3, 2, 2), Preset::kReduced);
  ns.notes = "Single integrator; the backward reachable set at t0 = 0 is |x| <= " +
             fmt(toy_brs_radius(opts.T)) + " without disturbance.";
  ns.x0 = {0.5};
  return ns;
}

std::vector<std::string> builtin_names() {
  return {"dubins",         "dubins_obstacle", "pendubot",
          "pursuer_evader", "pursuer_evader_nominal", "toy_integrator",
          "toy_integrator_robust", "gtm"};
}

NamedSpec builtin(const std::string& name, Preset preset) {
  if (name == "dubins") return dubins({false, preset});
  if (name == "dubins_obstacle") return dubins({true, preset});
  if (name == "pendubot") return pendubot(preset);
  if (name == "pursuer_evader") {
    PursuerOptions o;
    o.preset = preset;
    return pursuer_evader(o);
  }
  if (name == "pursuer_evader_nominal") {
    PursuerOptions o;
    o.cos_error_bound = 0.0;
    o.preset = preset;
    return pursuer_evader(o);
  }
  if (name == "toy_integrator") return toy_integrator({});
  if (name == "toy_integrator_robust") {
    ToyOptions o;
    o.disturbance = true;
    o.R = 0.1;
    o.wbar = 0.141;
    return toy_integrator(o);
  }
  if (name == "gtm") {
    throw SpecError(
        "gtm: the aircraft model needs aerodynamic tables that are not shipped; "
        "write the degree-3 longitudinal model to a spec file and pass it with --spec");
  }
  throw SpecError("unknown builtin '" + name + "'");
}

}  // namespace brs::models
