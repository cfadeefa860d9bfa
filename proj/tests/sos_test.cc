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

#include "brs/sos.h"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

namespace brs {
namespace {

using Eigen::MatrixXd;

Polynomial P(const VarSet& v, const char* s) { return Polynomial::parse(v, s); }

TEST(SosTest, PerfectSquareGram) {
  VarSet v({"x"});
  SosProgram prog(v);
  const std::vector<Monomial> basis{Monomial{0}, Monomial{1}};
  prog.add_sos_constraint("p", AffinePoly(P(v, "x^2 + 2*x + 1")), basis);
  const SosResult r = solve(prog);
  ASSERT_EQ(r.status, sdp::Status::kOptimal);
  const MatrixXd& Q = r.assignment->blocks[0];
  EXPECT_NEAR(Q(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(Q(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(Q(1, 1), 1.0, 1e-9);
  // Rank one: the decomposition is (x + 1)^2.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
  EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-8);
  EXPECT_NEAR(es.eigenvalues()(1), 2.0, 1e-8);
}

TEST(SosTest, ConstantGram) {
  VarSet v({"x"});
  SosProgram prog(v);
  prog.add_sos_constraint("one", AffinePoly(Polynomial(v, 1.0)));
  const SosResult r = solve(prog);
  ASSERT_EQ(r.status, sdp::Status::kOptimal);
  ASSERT_EQ(r.assignment->blocks[0].rows(), 1);
  EXPECT_NEAR(r.assignment->blocks[0](0, 0), 1.0, 1e-12);
}

TEST(SosTest, QuarticFormIsSos) {
  VarSet v({"x", "y"});
  SosProgram prog(v);
  const std::vector<Monomial> basis{Monomial{2, 0}, Monomial{1, 1}, Monomial{0, 2}};
  prog.add_sos_constraint("q", AffinePoly(P(v, "2*x^4 + 2*x^3*y - x^2*y^2 + 5*y^4")), basis);
  const SosResult r = solve(prog);
  ASSERT_EQ(r.status, sdp::Status::kOptimal);
  EXPECT_LT(r.assignment->residuals[0], 1e-8);
  EXPECT_GE(r.assignment->min_eigs[0], -1e-9);
}

TEST(SosTest, CompleteTheSquare) {
  // min c s.t. x^2 + b x + c SOS; completing the square gives c* = b^2 / 4.
  VarSet v({"x"});
  for (double b : {2.0, -3.0, 0.5}) {
    SosProgram prog(v);
    const int c = prog.add_scalar("c");
    AffinePoly e = AffinePoly(P(v, "x^2") + b * P(v, "x")) + prog.scalar_poly(c);
    prog.add_sos_constraint("sq", e);
    prog.set_objective(LinExpr::var(c));
    const SosResult r = solve(prog);
    ASSERT_EQ(r.status, sdp::Status::kOptimal);
    EXPECT_NEAR(r.assignment->scalars[c], b * b / 4.0, 1e-7);
  }
}

TEST(SosTest, EmptyProgram) {
  SosProgram prog(VarSet({"x"}));
  const SosResult r = solve(prog);
  ASSERT_EQ(r.status, sdp::Status::kOptimal);
  EXPECT_EQ(r.raw.primal_objective, 0.0);
}

TEST(SosTest, MotzkinIsNotSos) {
  VarSet v({"x", "y"});
  SosProgram prog(v);
  prog.add_sos_constraint("motzkin",
                          AffinePoly(P(v, "x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1")));
  const SosResult r = solve(prog);
  EXPECT_EQ(r.status, sdp::Status::kInfeasible);
}

TEST(SosTest, BilinearProductRejected) {
  VarSet v({"x"});
  SosProgram prog(v);
  std::vector<std::size_t> idx{0};
  const AffinePoly V = prog.new_free_poly("V", monomial_basis(v, idx, 2));
  const AffinePoly s3 = prog.new_sos_poly("s3", monomial_basis(v, idx, 1));
  try {
    (void)(s3 * V);
    FAIL() << "expected BilinearError";
  } catch (const BilinearError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("s3"), std::string::npos);
    EXPECT_NE(msg.find("V"), std::string::npos);
  }
  // Fixed operand on either side is fine.
  EXPECT_NO_THROW((void)(AffinePoly(P(v, "x")) * V));
}

TEST(SosTest, BasisInsufficientNamesMonomial) {
  VarSet v({"x"});
  SosProgram prog(v);
  try {
    prog.add_sos_constraint("c", AffinePoly(P(v, "x^2 + 1")), std::vector<Monomial>{Monomial{0}});
    FAIL() << "expected BasisInsufficientError";
  } catch (const BasisInsufficientError& e) {
    EXPECT_NE(std::string(e.what()).find("x^2"), std::string::npos);
  }
}

TEST(SosTest, ZeroPolynomialConstraint) {
  VarSet v({"x"});
  SosProgram prog(v);
  prog.add_sos_constraint("zero", AffinePoly(Polynomial(v)));
  const SosResult r = solve(prog);
  ASSERT_EQ(r.status, sdp::Status::kOptimal);
  EXPECT_EQ(r.assignment->residuals[0], 0.0);
}

TEST(SosTest, Residual) {
  VarSet v({"x"});
  const std::vector<Monomial> basis{Monomial{0}, Monomial{1}};
  MatrixXd Q(2, 2);
  Q << 1, 1, 1, 1;
  const Polynomial p = P(v, "x^2 + 2*x + 1");
  EXPECT_EQ(gram_residual(p, Q, basis), 0.0);
  Q(1, 1) += 1e-7;
  EXPECT_NEAR(gram_residual(p, Q, basis), 1e-7, 1e-15);
}

TEST(SosTest, SubstituteAndDiffOnAffine) {
  VarSet v({"t", "x"});
  SosProgram prog(v);
  std::vector<std::size_t> idx{0, 1};
  const AffinePoly V = prog.new_free_poly("V", monomial_basis(v, idx, 2));
  std::vector<double> vals(prog.num_scalars());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.5 + i;
  const Polynomial Vn = V.eval(vals);
  EXPECT_EQ(V.diff(1).eval(vals), Vn.diff(1));
  EXPECT_EQ(V.substitute(0, 2.0).eval(vals), Vn.substitute(0, 2.0));
}

TEST(SosTest, CompileIsDeterministic) {
  VarSet v({"x", "y"});
  auto build = [&]() {
    SosProgram prog(v);
    std::vector<std::size_t> idx{0, 1};
    const AffinePoly s = prog.new_sos_poly("s", monomial_basis(v, idx, 1));
    const int g = prog.add_scalar("g");
    prog.add_sos_constraint("c", AffinePoly(P(v, "x^4 + y^4 + 1")) - s * P(v, "x^2") +
                                     prog.scalar_poly(g));
    prog.set_objective(LinExpr::var(g));
    return compile(prog).cp.serialize();
  };
  EXPECT_EQ(build(), build());
}

MatrixXd random_psd(int n, std::mt19937_64& rng, bool full_rank) {
  std::normal_distribution<double> g(0.0, 1.0);
  const int r = full_rank ? n : std::max(1, n / 2);
  MatrixXd L = MatrixXd::NullaryExpr(n, r, [&]() { return g(rng); });
  MatrixXd Q = L * L.transpose();
  if (full_rank) Q += 0.1 * MatrixXd::Identity(n, n);
  return Q;
}

std::vector<Monomial> random_basis(const VarSet& v, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Monomial> all = monomial_basis(v, idx, 2);
  std::shuffle(all.begin(), all.end(), rng);
  const int k = std::uniform_int_distribution<int>(1, static_cast<int>(all.size()))(rng);
  all.resize(k);
  std::sort(all.begin(), all.end(), GradedLexLess{});
  return all;
}

TEST(SosProperty, GramRoundTrip) {
  std::mt19937_64 rng(31);
  VarSet v({"x", "y"});
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Monomial> basis = random_basis(v, rng);
    const MatrixXd Q = random_psd(static_cast<int>(basis.size()), rng, trial % 2 == 0);
    const Polynomial p = gram_polynomial(v, Q, basis);
    SosProgram prog(v);
    prog.add_sos_constraint("rt", AffinePoly(p));
    const SosResult r = solve(prog);
    if (r.usable() && r.assignment->residuals[0] < 1e-8 &&
        r.assignment->min_eigs[0] >= -1e-6) {
      ++ok;
    } else {
      ADD_FAILURE() << "trial " << trial << " status " << sdp::to_string(r.status)
                    << " res " << (r.assignment ? r.assignment->residuals[0] : -1.0)
                    << " eig " << (r.assignment ? r.assignment->min_eigs[0] : -1.0)
                    << " iters " << r.raw.iterations;
    }
  }
  EXPECT_EQ(ok, 100);
}

TEST(SosProperty, PruningKeepsRequiredMonomials) {
  std::mt19937_64 rng(4242);
  VarSet v({"a", "b", "c"});
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<Monomial> basis = random_basis(v, rng);
    const MatrixXd Q = random_psd(static_cast<int>(basis.size()), rng, true);
    const Polynomial p = gram_polynomial(v, Q, basis);
    std::vector<Monomial> support;
    for (const auto& [m, c] : p.terms()) support.push_back(m);
    const std::vector<Monomial> chosen = default_gram_basis(v, support);
    for (const auto& z : basis) {
      EXPECT_NE(std::find(chosen.begin(), chosen.end(), z), chosen.end())
          << "trial " << trial << " dropped " << monomial_to_string(v, z);
    }
  }
}

}  // namespace
}  // namespace brs
