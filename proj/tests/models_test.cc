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
#include <random>

#include <gtest/gtest.h>

namespace brs::models {
namespace {

// Coefficient of x1^e1 ... xn^en (no t) in p.
double coeff(const Polynomial& p, std::vector<int> x_exps) {
  Monomial m(p.vars().size());
  for (std::size_t i = 0; i < x_exps.size(); ++i) m.set(1 + i, x_exps[i]);
  return p.coefficient(m);
}

double at_origin(const Polynomial& p) { return p.constant(); }

TEST(ModelsTest, EveryBuiltinValidates) {
  for (const auto& name : builtin_names()) {
    if (name == "gtm") {
      EXPECT_THROW(builtin(name), SpecError);
      continue;
    }
    SCOPED_TRACE(name);
    const NamedSpec ns = builtin(name);
    EXPECT_EQ(ns.name, name);
    EXPECT_NO_THROW(validate(ns.spec));
    EXPECT_EQ(static_cast<int>(ns.x0.size()), ns.spec.n);
    EXPECT_EQ(ns.spec.degrees.V, ns.reduced.V);
    // The exported text reproduces the problem.
    EXPECT_EQ(spec_hash(parse_spec(write_spec(ns.spec))), spec_hash(ns.spec));
  }
  EXPECT_THROW(builtin("no_such_model"), SpecError);
}

TEST(ModelsTest, PendubotLiterals) {
  const ProblemSpec s = pendubot().spec;
  ASSERT_EQ(s.n, 4);
  EXPECT_DOUBLE_EQ(at_origin(s.g[1][0]), 44.252);
  EXPECT_DOUBLE_EQ(coeff(s.g[1][0], {0, 0, 2, 0}), -10.096);
  EXPECT_DOUBLE_EQ(at_origin(s.g[3][0]), -83.912);
  EXPECT_DOUBLE_EQ(coeff(s.g[3][0], {0, 0, 2, 0}), 37.802);
  EXPECT_DOUBLE_EQ(coeff(s.f[1], {3, 0, 0, 0}), -10.656);
  EXPECT_DOUBLE_EQ(coeff(s.f[1], {1, 0, 0, 0}), 66.523);
  EXPECT_DOUBLE_EQ(coeff(s.f[3], {1, 0, 0, 0}), -68.642);
  EXPECT_DOUBLE_EQ(coeff(s.f[3], {0, 0, 1, 0}), 103.978);
  EXPECT_DOUBLE_EQ(coeff(s.f[3], {0, 0, 3, 0}), -51.909);
  // The origin is an equilibrium of the drift.
  for (const auto& fi : s.f) EXPECT_EQ(at_origin(fi), 0.0);
  EXPECT_EQ(s.f[0], Polynomial::variable(s.vars, "x2"));
  EXPECT_EQ(s.T, 4.0);
  EXPECT_EQ(s.eps, 1e-4);
  // Target ellipsoid weights 1/0.1^2 and 1/0.35^2.
  const Polynomial& r = s.tube[0].r;
  EXPECT_NEAR(coeff(r, {2, 0, 0, 0}), 100.0, 1e-12);
  EXPECT_NEAR(coeff(r, {0, 2, 0, 0}), 1.0 / 0.1225, 1e-12);
  EXPECT_EQ(pendubot().x0, (std::vector<double>{-0.35, 2.6, 0.35, -4.0}));
}

TEST(ModelsTest, DubinsShape) {
  const ProblemSpec s = dubins().spec;
  for (const auto& fi : s.f) EXPECT_TRUE(fi.is_zero());
  EXPECT_EQ(s.T, 4.0);
  EXPECT_EQ(s.eps, 1e-3);
  EXPECT_EQ(s.input_rows.size(), 4u);
  const ProblemSpec o = dubins({true}).spec;
  ASSERT_EQ(o.tube.size(), 2u);
  EXPECT_FALSE(o.tube[1].terminal_only);
  EXPECT_EQ(o.tube[1].r, -dubins_obstacle(o.vars));
}

// Finite differences of the coordinate map along the car flow must match
// the polynomial vector field at the mapped inputs.
TEST(ModelsTest, DubinsChainRule) {
  const ProblemSpec s = dubins().spec;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = U(rng), b = U(rng), th = 0.7 * U(rng), om = 0.5 * U(rng), v = U(rng);
    const double h = 1e-5;
    auto flow = [&](double s_) {
      return dubins_from_car(a + s_ * v * std::cos(th), b + s_ * v * std::sin(th), th + s_ * om);
    };
    const auto xp = flow(h), xm = flow(-h);
    const auto x = dubins_from_car(a, b, th);
    const auto u = dubins_inputs_from_car(a, b, th, om, v);
    const std::vector<double> pt{0.0, x[0], x[1], x[2]};
    for (int i = 0; i < 3; ++i) {
      double rhs = s.f[i].eval(pt);
      for (int j = 0; j < 2; ++j) rhs += s.g[i][j].eval(pt) * u[j];
      EXPECT_NEAR((xp[i] - xm[i]) / (2 * h), rhs, 1e-6) << "state " << i;
    }
  }
}

TEST(ModelsTest, PursuerVariants) {
  const ProblemSpec with = pursuer_evader().spec;
  EXPECT_EQ(with.nd, 2);
  EXPECT_EQ(with.delta_bounds, (std::vector<double>{0.5, 0.05}));
  EXPECT_EQ(with.T, 2.6);
  PursuerOptions o;
  o.cos_error_bound = 0.0;
  const ProblemSpec without = pursuer_evader(o).spec;
  EXPECT_EQ(without.nd, 1);
  o.encoding = DeltaEncoding::kBall;
  o.cos_error_bound = 0.05;
  const ProblemSpec ball = pursuer_evader(o).spec;
  EXPECT_EQ(ball.delta_encoding, DeltaEncoding::kBall);
  EXPECT_NEAR(ball.delta_bar, std::sqrt(0.25 + 0.0025), 1e-15);
  o.target = PursuerTarget::kCylinder;
  const Polynomial& r = pursuer_evader(o).spec.tube[0].r;
  EXPECT_FALSE(r.depends_on(3));
  // Cosine and sine fits.
  EXPECT_DOUBLE_EQ(coeff(with.f[0], {0, 0, 2}), -0.4298);
  EXPECT_DOUBLE_EQ(coeff(with.f[1], {0, 0, 3}), -0.1511);
  EXPECT_DOUBLE_EQ(coeff(with.f[1], {0, 0, 1}), 1.0);
}

TEST(ModelsTest, ToyRadius) {
  EXPECT_EQ(toy_brs_radius(1.0), 1.2);
  EXPECT_EQ(toy_brs_radius(0.0), 0.2);
  ToyOptions o;
  o.T = 0.0;
  EXPECT_NO_THROW(validate(toy_integrator(o).spec));
  const ProblemSpec r = builtin("toy_integrator_robust").spec;
  EXPECT_TRUE(r.w_active());
  EXPECT_EQ(r.R, 0.1);
  EXPECT_EQ(r.wbar, 0.141);
}

}  // namespace
}  // namespace brs::models
