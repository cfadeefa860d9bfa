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

// Funnel certificates: storage function V, feedback k, level gamma, the
// S-procedure multipliers and one Gram matrix per SOS condition. The text
// format is exact (every double printed with 17 significant digits) and
// embeds the problem spec so a certificate file can be checked on its own.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "brs/polynomial.h"
#include "brs/problem.h"

namespace brs {

class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// offset + z' Q z.
struct GramForm {
  std::string name;
  std::vector<Monomial> basis;
  Eigen::MatrixXd Q;
  double offset = 0.0;

  Polynomial poly(const VarSet& vars) const;
};

struct Certificate {
  std::string spec_name;
  std::string spec_hash;
  std::string spec_text;  // write_spec() of the problem
  VarSet vars;

  Polynomial V{VarSet()};
  std::vector<Polynomial> k;
  double gamma = 0.0;
  std::vector<double> gamma_history;

  std::vector<GramForm> multipliers;
  std::vector<GramForm> constraints;

  double tol_res = 1e-6;
  double tol_psd = 1e-6;
  std::string status = "ok";

  const GramForm* multiplier(std::string_view name) const;
  const GramForm* constraint(std::string_view name) const;
  GramForm* multiplier(std::string_view name);
};

std::string write_certificate(const Certificate& c);
Certificate parse_certificate(std::string_view text);

/// Parses the embedded spec and checks it against the recorded hash.
ProblemSpec certificate_spec(const Certificate& c);

// Names shared by synthesis and verification.
namespace names {
inline constexpr const char* kDissipation = "dissipation";
std::string tube(int j);       // always-imposed tube term j
std::string terminal(int j);   // terminal term j
std::string input(int i);      // input row i
std::string indexed(const std::string& family, int i);
std::string indexed(const std::string& family, int i, int j);
}  // namespace names

}  // namespace brs
