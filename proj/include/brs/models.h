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

// Built-in problem specs: Dubins car (with and without an obstacle), the
// pendubot, a pursuer-evader game with bounded evader input, and a 1-D
// integrator with a closed-form backward reachable set.

#include <array>
#include <string>
#include <vector>

#include "brs/problem.h"

namespace brs::models {

struct NamedSpec {
  std::string name;
  ProblemSpec spec;
  std::string notes;
  TemplateDegrees reduced;  // desk-scale preset (the default)
  TemplateDegrees full;     // degrees of the published runs
  std::vector<double> x0;   // sample initial condition for simulation
};

enum class Preset { kReduced, kFull };

struct DubinsOptions {
  bool obstacle = false;
  Preset preset = Preset::kReduced;
};
NamedSpec dubins(const DubinsOptions& opts = {});

/// Maps car coordinates (a, b, theta) to the polynomial coordinates.
std::array<double, 3> dubins_from_car(double a, double b, double theta);
/// Maps (omega, v) at a car state to the polynomial inputs.
std::array<double, 2> dubins_inputs_from_car(double a, double b, double theta,
                                             double omega, double v);

/// obs(x) = (x1 - 1.5)^2 + x2^2 + x3^2 - 0.25 over the Dubins variables.
Polynomial dubins_obstacle(const VarSet& vars);

NamedSpec pendubot(Preset preset = Preset::kReduced);

enum class PursuerTarget { kBall, kCylinder };

struct PursuerOptions {
  double cos_error_bound = 0.05;  // 0 drops the cosine-error parameter
  DeltaEncoding encoding = DeltaEncoding::kBox;
  PursuerTarget target = PursuerTarget::kBall;
  Preset preset = Preset::kReduced;
};
NamedSpec pursuer_evader(const PursuerOptions& opts = {});

struct ToyOptions {
  double T = 1.0;
  /// Adds an additive disturbance x' = u + w with this budget.
  bool disturbance = false;
  double R = 0.0;
  double wbar = 0.0;
};
/// x' = u (+ w), |u| <= 1, target x^2 <= 0.04 at T. Without disturbance the
/// backward reachable set at t0 = 0 is |x| <= 0.2 + T.
NamedSpec toy_integrator(const ToyOptions& opts = {});
double toy_brs_radius(double T);

/// Names accepted by builtin().
std::vector<std::string> builtin_names();
/// Looks up a built-in by name ("dubins", "dubins_obstacle", "pendubot",
/// "pursuer_evader", "pursuer_evader_nominal", "toy_integrator",
/// "toy_integrator_robust", "gtm"). Throws SpecError for unknown names and
/// for "gtm", whose aerodynamic tables are not available.
NamedSpec builtin(const std::string& name, Preset preset = Preset::kReduced);

}  // namespace brs::models
