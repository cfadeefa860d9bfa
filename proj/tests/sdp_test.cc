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

#include "brs/sdp.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace brs::sdp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(SdpTest, ScalarOrthant) {
  // min x s.t. x - s = 1, s >= 0, x free  ->  x* = 1.
  ConicProblem cp;
  cp.num_free = 1;
  cp.num_nonneg = 1;
  cp.c = {1.0, 0.0};
  cp.A = {{0, 0, 1.0}, {0, 1, -1.0}};
  cp.b = {1.0};
  const ConicSolution sol = solve(cp);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-7);
  EXPECT_NEAR(sol.primal_objective, 1.0, 1e-7);
}

TEST(SdpTest, TraceWithFixedEntry) {
  ConicProblem cp;
  cp.psd_sizes = {3};
  cp.c.assign(6, 0.0);
  for (int i = 0; i < 3; ++i) cp.c[ConicProblem::tri_index(3, i, i)] = 1.0;
  cp.A = {{0, ConicProblem::tri_index(3, 0, 0), 1.0}};
  cp.b = {2.0};
  const ConicSolution sol = solve(cp);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_NEAR(sol.primal_objective, 2.0, 1e-7);
  const MatrixXd X = block_matrix(cp, sol.x, 0);
  EXPECT_NEAR(X(0, 0), 2.0, 1e-6);
  EXPECT_NEAR(X(1, 1), 0.0, 1e-6);
}

TEST(SdpTest, MaxOffDiagonal) {
  // max g s.t. [[1, g], [g, 1]] PSD. Determinant 1 - g^2 >= 0 gives g* = 1.
  ConicProblem cp;
  cp.num_free = 1;
  cp.psd_sizes = {2};
  cp.c = {-1.0, 0.0, 0.0, 0.0};
  cp.A = {{0, 1, 1.0}, {1, 3, 1.0}, {2, 2, 1.0}, {2, 0, -1.0}};
  cp.b = {1.0, 1.0, 0.0};
  const ConicSolution sol = solve(cp);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-6);
}

TEST(SdpTest, DetectsInfeasible) {
  // X PSD 2x2 with X00 = -1.
  ConicProblem cp;
  cp.psd_sizes = {2};
  cp.c = {0.0, 0.0, 0.0};
  cp.A = {{0, 0, 1.0}};
  cp.b = {-1.0};
  const ConicSolution sol = solve(cp);
  ASSERT_EQ(sol.status, Status::kInfeasible);
  // Farkas ray: b'y = 1 and -A'y is PSD.
  EXPECT_NEAR(sol.y[0] * -1.0, 1.0, 1e-9);
  EXPECT_LT(sol.y[0], 0.0);
}

TEST(SdpTest, DetectsUnbounded) {
  // min -x, x - s = 0, s >= 0.
  ConicProblem cp;
  cp.num_free = 1;
  cp.num_nonneg = 1;
  cp.c = {-1.0, 0.0};
  cp.A = {{0, 0, 1.0}, {0, 1, -1.0}};
  cp.b = {0.0};
  EXPECT_EQ(solve(cp).status, Status::kUnbounded);
}

TEST(SdpTest, EmptyProblem) {
  ConicProblem cp;
  const ConicSolution sol = solve(cp);
  EXPECT_EQ(sol.status, Status::kOptimal);
  EXPECT_EQ(sol.primal_objective, 0.0);
}

TEST(SdpTest, MinEig) {
  EXPECT_NEAR(min_eig(MatrixXd::Identity(3, 3)), 1.0, 1e-14);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -2.0;
  EXPECT_NEAR(min_eig(d), -2.0, 1e-14);
  MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  // det(m - l I) = (2 - l)^2 - 1, smallest root l = 1.
  EXPECT_NEAR(min_eig(m), 1.0, 1e-12);
  m(0, 1) = 1.1;
  EXPECT_THROW(min_eig(m), SdpError);
}

TEST(SdpTest, SerializeRoundTrip) {
  ConicProblem cp;
  cp.num_free = 1;
  cp.num_nonneg = 2;
  cp.psd_sizes = {2, 1};
  cp.c = {0.5, 0, 1, 0, -0.25, 3, 1};
  cp.A = {{0, 0, 1.0}, {0, 4, 2.0}, {1, 6, -1.0}};
  cp.b = {1.0, 0.1};
  const ConicProblem back = ConicProblem::deserialize(cp.serialize());
  EXPECT_EQ(back.serialize(), cp.serialize());
  EXPECT_THROW(ConicProblem::deserialize("nonsense"), SdpError);
}

// Random primal-dual pair with a planted strictly complementary optimum.
struct Planted {
  ConicProblem cp;
  double optimum;
};

Planted planted_sdp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nblocks(1, 3);
  std::uniform_int_distribution<int> bsize(1, 5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  Planted out;
  ConicProblem& cp = out.cp;
  cp.num_free = std::uniform_int_distribution<int>(0, 2)(rng);
  cp.num_nonneg = std::uniform_int_distribution<int>(0, 3)(rng);
  const int nb = nblocks(rng);
  for (int k = 0; k < nb; ++k) cp.psd_sizes.push_back(bsize(rng));
  const int n = cp.num_vars();

  // Planted primal X* and slack S* with complementary ranges per block.
  std::vector<double> xs(n, 0.0), ss(n, 0.0);
  for (int j = 0; j < cp.num_free; ++j) xs[j] = g(rng);
  for (int l = 0; l < cp.num_nonneg; ++l) {
    if (l % 2 == 0) {
      xs[cp.num_free + l] = pos(rng);
    } else {
      ss[cp.num_free + l] = pos(rng);
    }
  }
  for (int k = 0; k < nb; ++k) {
    const int s = cp.psd_sizes[k];
    MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(MatrixXd::NullaryExpr(
                     s, s, [&]() { return g(rng); }))
                     .householderQ();
    const int r = std::uniform_int_distribution<int>(0, s)(rng);
    VectorXd dx = VectorXd::Zero(s), ds = VectorXd::Zero(s);
    for (int i = 0; i < s; ++i) (i < r ? dx(i) : ds(i)) = pos(rng);
    const MatrixXd X = Q * dx.asDiagonal() * Q.transpose();
    const MatrixXd S = Q * ds.asDiagonal() * Q.transpose();
    const int off = cp.psd_offset(k);
    for (int i = 0; i < s; ++i) {
      for (int j = i; j < s; ++j) {
        xs[off + ConicProblem::tri_index(s, i, j)] = X(i, j);
        // Off-diagonal variables enter the objective doubled.
        ss[off + ConicProblem::tri_index(s, i, j)] = i == j ? S(i, j) : 2.0 * S(i, j);
      }
    }
  }
  const int m = std::max(1, std::min(n, n / 2 + 1));
  MatrixXd A = MatrixXd::NullaryExpr(m, n, [&]() { return g(rng); });
  VectorXd y = VectorXd::NullaryExpr(m, [&]() { return g(rng); });
  Eigen::Map<VectorXd> xv(xs.data(), n), sv(ss.data(), n);
  const VectorXd b = A * xv;
  const VectorXd c = A.transpose() * y + sv;
  // Free columns must have zero reduced cost.
  cp.c.assign(c.data(), c.data() + n);
  cp.b.assign(b.data(), b.data() + m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) cp.A.push_back({i, j, A(i, j)});
  }
  out.optimum = c.dot(xv);
  return out;
}

TEST(SdpProperty, PlantedOptimumAndWeakDuality) {
  std::mt19937_64 rng(2026);
  int solved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Planted p = planted_sdp(rng);
    const ConicSolution sol = solve(p.cp);
    if (sol.status == Status::kOptimal) {
      EXPECT_GE(sol.primal_objective, sol.dual_objective - 1e-6) << "trial " << trial;
      const double rel = std::abs(sol.primal_objective - p.optimum) /
                         (1.0 + std::abs(p.optimum));
      if (rel < 1e-6) ++solved;
    }
  }
  EXPECT_GE(solved, 99);
}

TEST(SdpProperty, Deterministic) {
  std::mt19937_64 rng(5);
  const Planted p = planted_sdp(rng);
  const ConicSolution a = solve(p.cp);
  const ConicSolution b = solve(p.cp);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.iterations, b.iterations);
}

}  // namespace
}  // namespace brs::sdp
