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

#include "brs/certificate.h"

#include <random>

#include <gtest/gtest.h>

#include "brs/models.h"

namespace brs {
namespace {

Certificate sample(const ProblemSpec& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Certificate c;
  c.spec_name = s.name;
  c.spec_text = write_spec(s);
  c.spec_hash = hash_hex(spec_hash(s));
  c.vars = s.vars;
  c.V = Polynomial::parse(s.vars, "x^2 + 0.25*t*x^2") * N(rng);
  c.k = {Polynomial::parse(s.vars, "-x + t") * N(rng)};
  c.gamma = std::abs(N(rng)) / 3.0;
  c.gamma_history = {c.gamma / 2, c.gamma};
  const std::vector<Monomial> basis{Monomial{0, 0}, Monomial{0, 1}, Monomial{1, 0}};
  Eigen::MatrixXd Q = Eigen::MatrixXd::Random(3, 3);
  Q = Q * Q.transpose();
  c.multipliers.push_back({"s3", basis, Q, 0.0});
  c.multipliers.push_back({"sa[0]", {Monomial{0, 0}}, Eigen::MatrixXd::Constant(1, 1, 0.1), 1e-4});
  c.constraints.push_back({names::kDissipation, basis, Q * N(rng), 0.0});
  c.status = "warning: test";
  c.tol_res = 1e-7;
  return c;
}

TEST(CertificateTest, ExactRoundTrip) {
  const ProblemSpec s = models::toy_integrator().spec;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Certificate a = sample(s, seed);
    const std::string text = write_certificate(a);
    const Certificate b = parse_certificate(text);
    EXPECT_EQ(write_certificate(b), text);
    EXPECT_EQ(b.V, a.V.rebase(b.vars));
    EXPECT_EQ(b.gamma, a.gamma);
    EXPECT_EQ(b.gamma_history, a.gamma_history);
    ASSERT_EQ(b.multipliers.size(), 2u);
    EXPECT_EQ(b.multipliers[0].Q, a.multipliers[0].Q);
    EXPECT_EQ(b.multipliers[1].offset, 1e-4);
    EXPECT_EQ(b.constraints[0].basis, a.constraints[0].basis);
    EXPECT_EQ(b.status, a.status);
    EXPECT_EQ(b.tol_res, 1e-7);
  }
}

TEST(CertificateTest, EmbeddedSpecChecked) {
  const ProblemSpec s = models::toy_integrator().spec;
  Certificate c = sample(s, 1);
  EXPECT_EQ(spec_hash(certificate_spec(c)), spec_hash(s));
  c.spec_hash = "0000000000000000";
  EXPECT_THROW(certificate_spec(c), CertificateError);
}

TEST(CertificateTest, Lookup) {
  Certificate c = sample(models::toy_integrator().spec, 2);
  EXPECT_NE(c.multiplier("s3"), nullptr);
  EXPECT_EQ(c.multiplier("s4[0]"), nullptr);
  EXPECT_NE(c.constraint(names::kDissipation), nullptr);
  EXPECT_EQ(names::indexed("s10", 1, 2), "s10[1,2]");
  EXPECT_EQ(names::terminal(3), "terminal[3]");
}

TEST(CertificateTest, MalformedTextRejected) {
  EXPECT_THROW(parse_certificate("not a certificate"), CertificateError);
  const std::string good = write_certificate(sample(models::toy_integrator().spec, 3));
  EXPECT_THROW(parse_certificate(good.substr(0, good.size() / 2)), CertificateError);
}

TEST(CertificateTest, GramFormPoly) {
  const VarSet v({"t", "x"});
  GramForm g{"s", {Monomial{0, 0}, Monomial{0, 1}}, Eigen::MatrixXd::Identity(2, 2), 0.5};
  g.Q(0, 1) = g.Q(1, 0) = 1.0;
  EXPECT_EQ(g.poly(v), Polynomial::parse(v, "1.5 + 2*x + x^2"));
}

}  // namespace
}  // namespace brs
