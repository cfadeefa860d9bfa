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

#include "brs/problem.h"

#include <string>

#include <gtest/gtest.h>

namespace brs {
namespace {

constexpr const char* kToy = R"(name = toy
[variables]
states = x
inputs = u
[dynamics]
x' = u
[horizon]
t0 = 0
T = 1
[tube]
terminal: x^2 - 0.04
[inputs]
u <= 1
-u <= 1
)";

std::string with(const std::string& extra) { return std::string(kToy) + extra; }

TEST(ProblemTest, ParsesToy) {
  const ProblemSpec s = parse_spec(kToy);
  EXPECT_EQ(s.name, "toy");
  EXPECT_EQ(s.n, 1);
  EXPECT_EQ(s.m(), 1);
  ASSERT_EQ(s.vars.size(), 2u);
  EXPECT_EQ(s.vars.name(0), "t");
  EXPECT_TRUE(s.f[0].is_zero());
  EXPECT_EQ(s.g[0][0], Polynomial(s.vars, 1.0));
  ASSERT_EQ(s.tube.size(), 1u);
  EXPECT_TRUE(s.tube[0].terminal_only);
  ASSERT_EQ(s.input_rows.size(), 2u);
  EXPECT_FALSE(s.robust());
  EXPECT_NO_THROW(validate(s));
}

TEST(ProblemTest, InputRowsNormalized) {
  const ProblemSpec s = parse_spec(kToy);
  // u <= 1 is a = 1, b = 1; -u <= 1 is a = -1, b = 1.
  EXPECT_EQ(s.input_rows[0].a[0].constant(), 1.0);
  EXPECT_EQ(s.input_rows[0].b.constant(), 1.0);
  EXPECT_EQ(s.input_rows[1].a[0].constant(), -1.0);
  EXPECT_EQ(s.input_rows[1].b.constant(), 1.0);
}

TEST(ProblemTest, WriteParseRoundTrip) {
  const ProblemSpec a = parse_spec(with(R"([uncertainty]
delta_bounds =
[templates]
deg_V = 4
deg_s4 = 2
[options]
eps = 0.001
x_eq = 0
V0 = x^2 + 0.5*t
)"));
  const std::string text = write_spec(a);
  const ProblemSpec b = parse_spec(text);
  EXPECT_EQ(write_spec(b), text);
  EXPECT_EQ(spec_hash(a), spec_hash(b));
  EXPECT_EQ(b.degrees.V, 4);
  EXPECT_EQ(b.degrees.multiplier("s4"), 2);
  EXPECT_EQ(b.eps, 0.001);
  ASSERT_TRUE(b.V0.has_value());
  EXPECT_EQ(*b.V0, *a.V0);
}

TEST(ProblemTest, HashSeesChanges) {
  const ProblemSpec a = parse_spec(kToy);
  ProblemSpec b = a;
  b.T = 2.0;
  EXPECT_NE(spec_hash(a), spec_hash(b));
  EXPECT_EQ(hash_hex(spec_hash(a)).size(), 16u);
}

TEST(ProblemTest, HorizonAndBudget) {
  const ProblemSpec s = parse_spec(R"(name = d
[variables]
states = x
inputs = u
disturbances = w
[dynamics]
x' = u + w
[horizon]
t0 = 0
T = 2
[tube]
terminal: x^2 - 1
[inputs]
u <= 1
[uncertainty]
R = 0.5
q = t^2/4
)");
  EXPECT_TRUE(s.w_active());
  const Polynomial t = Polynomial::variable(s.vars, "t");
  EXPECT_EQ(s.horizon_poly(), t * (Polynomial(s.vars, 2.0) - t));
  const std::vector<double> pt{2.0, 0.0, 0.0};
  EXPECT_NEAR(s.budget_poly().eval(pt), 0.25, 1e-15);
}

TEST(ProblemTest, RejectsBadSpecs) {
  // Unknown section, unknown key, missing dynamics, non-affine input.
  EXPECT_THROW(parse_spec(with("[bogus]\n")), SpecError);
  EXPECT_THROW(parse_spec(with("[options]\ncolour = red\n")), SpecError);
  EXPECT_THROW(parse_spec(R"(name = a
[variables]
states = x y
inputs = u
[dynamics]
x' = u
[horizon]
t0 = 0
T = 1
[tube]
terminal: x^2 - 1
)"),
               SpecError);
  EXPECT_THROW(parse_spec(R"(name = a
[variables]
states = x
inputs = u
[dynamics]
x' = u^2
[horizon]
t0 = 0
T = 1
[tube]
terminal: x^2 - 1
)"),
               SpecError);
  // T < t0.
  ProblemSpec s = parse_spec(kToy);
  s.T = -1.0;
  EXPECT_THROW(validate(s), SpecError);
  // Budget without q.
  EXPECT_THROW(parse_spec(R"(name = a
[variables]
states = x
inputs = u
disturbances = w
[dynamics]
x' = u + w
[horizon]
t0 = 0
T = 1
[tube]
terminal: x^2 - 1
[uncertainty]
R = 1
)"),
               SpecError);
}

TEST(ProblemTest, TemplateBasisSplitsTimeDegree) {
  const VarSet v({"t", "x", "y"});
  // Degree 2 in (x, y) times t^j, j <= 1: 6 * 2 monomials.
  const auto b = template_basis(v, {0, 1, 2}, 2, 1, std::size_t{0});
  EXPECT_EQ(b.size(), 12u);
  bool has_txx = false;
  for (const auto& m : b) {
    EXPECT_LE(m[1] + m[2], 2);
    EXPECT_LE(m[0], 1);
    has_txx = has_txx || (m[0] == 1 && m[1] == 2);
  }
  EXPECT_TRUE(has_txx);
  // Without a time index it is the plain total-degree basis.
  EXPECT_EQ(template_basis(v, {1, 2}, 3, 0, std::nullopt).size(), 10u);
}

TEST(ProblemTest, SplitControlAffine) {
  ProblemSpec s;
  s.name = "s";
  s.n = 2;
  s.inputs = {"u"};
  s.vars = make_vars({"a", "b"}, {}, {});
  split_control_affine(s, {"b + a*u", "-a^3 + (1 + b^2)*u"});
  EXPECT_EQ(s.f[0], Polynomial::parse(s.vars, "b"));
  EXPECT_EQ(s.g[0][0], Polynomial::parse(s.vars, "a"));
  EXPECT_EQ(s.f[1], Polynomial::parse(s.vars, "-a^3"));
  EXPECT_EQ(s.g[1][0], Polynomial::parse(s.vars, "1 + b^2"));
  EXPECT_THROW(split_control_affine(s, {"u^2", "a"}), SpecError);
}

}  // namespace
}  // namespace brs
