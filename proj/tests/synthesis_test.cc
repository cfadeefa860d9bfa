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

#include <cmath>

#include <gtest/gtest.h>

#include "brs/certify.h"
#include "brs/models.h"

namespace brs {
namespace {

ProblemSpec scalar(double a, double b) {
  return parse_spec("name = s\n[variables]\nstates = x\ninputs = u\n[dynamics]\nx' = " +
                    format_double(a) + "*x + " + format_double(b) +
                    "*u\n[horizon]\nt0 = 0\nT = 1\n[tube]\nterminal: x^2 - 1\n");
}

ProblemSpec toy_tube(bool always) {
  std::string text = R"(name = toy_tube
[variables]
states = x
inputs = u
[dynamics]
x' = u
[horizon]
t0 = 0
T = 1
[tube]
)";
  text += always ? "always: x^2 - 0.04\n" : "terminal: x^2 - 0.04\n";
  text += "[inputs]\nu <= 1\n-u <= 1\n[templates]\ndeg_k = 3\ndeg_k_t = 2\n";
  return parse_spec(text);
}

// Largest |x| with V(t0, x) <= gamma, by scanning.
double radius(const Certificate& c, const ProblemSpec& s) {
  std::vector<double> pt(s.vars.size(), 0.0);
  pt[0] = s.t0;
  double r = 0.0;
  for (int i = -3000; i <= 3000; ++i) {
    pt[1] = i * 1e-3;
    if (c.V.rebase(s.vars).eval(pt) <= c.gamma) r = std::max(r, std::abs(pt[1]));
  }
  return r;
}

// x' = a x + b u with unit weights: P = (a + sqrt(a^2 + b^2)) / b^2.
TEST(SynthesisTest, ScalarRiccati) {
  for (auto [a, b] : {std::pair{0.0, 1.0}, {0.5, 2.0}, {-1.0, 0.5}}) {
    const auto P = lqr_cost_matrix(scalar(a, b));
    EXPECT_NEAR(P(0, 0), (a + std::sqrt(a * a + b * b)) / (b * b), 1e-9) << a << " " << b;
  }
}

TEST(SynthesisTest, DoubleIntegratorRiccati) {
  const ProblemSpec s = parse_spec(R"(name = di
[variables]
states = x y
inputs = u
[dynamics]
x' = y
y' = u
[horizon]
t0 = 0
T = 1
[tube]
terminal: x^2 + y^2 - 1
)");
  bool shifted = true;
  const auto P = lqr_cost_matrix(s, &shifted);
  EXPECT_FALSE(shifted);
  EXPECT_NEAR(P(0, 0), std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(P(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(P(1, 1), std::sqrt(3.0), 1e-9);
}

TEST(SynthesisTest, InitialVIsQuadraticAtEquilibrium) {
  const ProblemSpec s = models::toy_integrator().spec;
  InitInfo info;
  const Polynomial V0 = initialize_V0(s, {}, &info);
  // LQR for x' = u is P = 1, possibly rescaled by a power of ten.
  EXPECT_EQ(V0, Polynomial::parse(s.vars, "x^2") * info.scale);
  EXPECT_GT(info.gamma, 0.0);
  ASSERT_TRUE(info.witness.has_value());
  EXPECT_EQ(check_algebraic(*info.witness, s).verdict, Verdict::kCertified);
}

TEST(SynthesisTest, Templates) {
  const ProblemSpec s = models::toy_integrator().spec;
  // V: x^a t^b, a <= 2, b <= 2. k: x^a t^b, a <= 3, b <= 2.
  EXPECT_EQ(v_template(s).size(), 9u);
  EXPECT_EQ(k_template(s).size(), 12u);
}

// With T = t0 the target is its own reachable set: V = r_T gives gamma* = 0.
TEST(SynthesisTest, ZeroHorizon) {
  models::ToyOptions o;
  o.T = 0.0;
  const ProblemSpec s = models::toy_integrator(o).spec;
  SynthesisOptions opts;
  opts.tol_bisect = 1e-6;
  const Polynomial V = Polynomial::parse(s.vars, "x^2 - 0.04");
  const Certificate c = gamma_step(s, V, -0.03, std::nullopt, opts);
  // Feasibility is accepted at residual 1e-6, which is also how far above
  // zero the level may land.
  EXPECT_NEAR(c.gamma, 0.0, 1e-5);
  EXPECT_LE(c.gamma, opts.tol_res);
}

TEST(SynthesisTest, InfeasibleLowerLevelThrows) {
  const ProblemSpec s = models::toy_integrator().spec;
  // Radius 2 cannot be steered into |x| <= 0.2 with |u| <= 1 in one second.
  EXPECT_THROW(gamma_step(s, Polynomial::parse(s.vars, "x^2"), 4.0, std::nullopt, {}),
               SynthesisError);
}

TEST(SynthesisTest, NoInitializationForUncontrollableDrift) {
  const ProblemSpec s = parse_spec(R"(name = drift
[variables]
states = x
inputs = u
[dynamics]
x' = 1 + 0.001*x*u
[horizon]
t0 = 0
T = 1
[tube]
terminal: x^2 - 0.04
[inputs]
u <= 1
-u <= 1
)");
  EXPECT_THROW(synthesize(s), SynthesisError);
}

// The robust builder with every robust channel switched off emits the
// nominal program.
TEST(SynthesisTest, RobustDegeneratesToNominal) {
  models::ToyOptions o;
  o.disturbance = true;
  const ProblemSpec robust = models::toy_integrator(o).spec;
  const ProblemSpec nominal = models::toy_integrator().spec;
  auto build = [](const ProblemSpec& s, bool rob) {
    BuiltProgram bp(s.vars);
    StepUnknowns u{AffinePoly(Polynomial::parse(s.vars, "x^2")), {}, std::nullopt, std::nullopt};
    if (rob) {
      build_robust_constraints(bp, s, u, 0.04);
    } else {
      build_nominal_constraints(bp, s, u, 0.04);
    }
    return bp;
  };
  const BuiltProgram a = build(nominal, false), b = build(robust, true);
  ASSERT_EQ(a.conditions.size(), b.conditions.size());
  ASSERT_EQ(a.multipliers.size(), b.multipliers.size());
  for (std::size_t i = 0; i < a.multipliers.size(); ++i) {
    EXPECT_EQ(a.multipliers[i].name, b.multipliers[i].name);
    EXPECT_EQ(a.multipliers[i].basis.size(), b.multipliers[i].basis.size());
  }
  SynthesisOptions opts;
  opts.iterations = 2;
  const auto ra = synthesize(nominal, opts);
  opts.robust_path = true;
  const auto rb = synthesize(robust, opts);
  EXPECT_NEAR(ra.certificate.gamma, rb.certificate.gamma, 1e-6);
}

// An always-imposed tube is a superset of conditions of the terminal one.
TEST(SynthesisTest, TubeNotAboveTerminal) {
  SynthesisOptions opts;
  opts.tol_bisect = 1e-7;
  const ProblemSpec a = toy_tube(true), t = toy_tube(false);
  for (const char* v : {"x^2", "x^2 - 0.02*t", "x^2 + 0.5*t*x^2"}) {
    const double ga = gamma_step(a, Polynomial::parse(a.vars, v), 1e-3, std::nullopt, opts).gamma;
    const double gt = gamma_step(t, Polynomial::parse(t.vars, v), 1e-3, std::nullopt, opts).gamma;
    // For x^2 - 0.02*t both optima are exactly 0.02; the allowance covers
    // feasibility accepted at residual 1e-6.
    EXPECT_LE(ga, gt + 1e-5) << v;
  }
}

class ToySynthesis : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthesisOptions opts;
    opts.iterations = 4;
    result_ = new SynthesisResult(synthesize(models::toy_integrator().spec, opts));
  }
  static void TearDownTestSuite() {
    delete result_;
    result_ = nullptr;
  }
  static SynthesisResult* result_;
  ProblemSpec spec = models::toy_integrator().spec;
};
SynthesisResult* ToySynthesis::result_ = nullptr;

TEST_F(ToySynthesis, HistoryNondecreasing) {
  const auto& h = result_->certificate.gamma_history;
  ASSERT_GE(h.size(), 2u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GE(h[i], h[i - 1] - 1e-8);
  EXPECT_LT(h.front(), h.back());
  EXPECT_EQ(result_->status, "ok");
}

TEST_F(ToySynthesis, InsideAnalyticSet) {
  const double r = radius(result_->certificate, spec);
  EXPECT_GT(r, 0.2);
  EXPECT_LE(r, models::toy_brs_radius(1.0));
}

TEST_F(ToySynthesis, Certifies) {
  const auto rep = certify(result_->certificate, spec);
  EXPECT_EQ(rep.verdict, Verdict::kCertified) << rep.summary();
}

TEST_F(ToySynthesis, StepRecords) {
  int gammas = 0, vs = 0;
  for (const auto& st : result_->steps) {
    gammas += st.step == "gamma";
    vs += st.step == "V";
    EXPECT_GE(st.seconds, 0.0);
  }
  EXPECT_GE(gammas, 1);
  EXPECT_GE(vs, 1);
}

// The V step keeps the previous t0 sublevel set, and the next gamma step
// starts feasible from there.
TEST_F(ToySynthesis, VStepContainmentAndMonotonicity) {
  SynthesisOptions opts;
  const Polynomial V0 = result_->V0;
  InitInfo info;
  initialize_V0(spec, opts, &info);
  const Certificate w1 = gamma_step(spec, V0, info.gamma, std::nullopt, opts, &*info.witness);
  VStepInfo vi;
  const Certificate c1 = v_step(spec, w1, V0, opts, &vi);
  EXPECT_GE(vi.margin, 0.0);
  EXPECT_EQ(check_algebraic(c1, spec).verdict, Verdict::kCertified);
  std::vector<double> pt(spec.vars.size(), 0.0);
  const Polynomial Vn = c1.V.rebase(spec.vars);
  int inside = 0;
  for (int i = -20000; i <= 20000; ++i) {
    pt[1] = i * 1e-4;
    if (V0.eval(pt) <= w1.gamma) {
      ++inside;
      EXPECT_LE(Vn.eval(pt), w1.gamma + 1e-9) << pt[1];
    }
  }
  EXPECT_GT(inside, 100);
  const Certificate w2 = gamma_step(spec, c1.V, c1.gamma, std::nullopt, opts, &c1);
  EXPECT_GE(w2.gamma, w1.gamma - 1e-8);
}

}  // namespace
}  // namespace brs
