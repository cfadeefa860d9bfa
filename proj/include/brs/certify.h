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

// Independent verification of certificates.
//
// The algebraic check rebuilds every SOS condition from the problem spec and
// the certificate's V, k and multipliers with plain polynomial arithmetic
// (no solver data is trusted) and compares it with the stored Gram matrix.
// The sampling check draws points from the certified level sets and tests
// the pointwise conditions they imply: tube membership, input limits and
// the dissipation inequality.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "brs/certificate.h"
#include "brs/problem.h"

namespace brs {

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Verdict { kCertified, kToleranceFail, kSampleFail };
const char* to_string(Verdict v);

struct AlgebraicCheck {
  std::string name;
  double residual = 0.0;  // max |coefficient| of condition - z'Qz (0 for multipliers)
  double min_eig = 0.0;
  bool ok = true;
  std::string note;
};

struct ContainmentCheck {
  std::string name;
  long samples = 0;
  long violations = 0;
  double worst_margin = 0.0;  // largest value of (lhs - rhs); <= 0 is satisfied
};

struct VerificationReport {
  std::vector<AlgebraicCheck> conditions;
  std::vector<AlgebraicCheck> multipliers;
  std::vector<ContainmentCheck> containments;
  long attempts = 0;
  long accepted = 0;
  Verdict verdict = Verdict::kCertified;

  double acceptance_rate() const {
    return attempts > 0 ? static_cast<double>(accepted) / attempts : 0.0;
  }
  /// One line naming the first failing item (or "certified").
  std::string summary() const;
  /// Structured text report.
  std::string to_text() const;
};

struct CertifyOptions {
  std::optional<double> tol_res;  // default: the certificate's
  std::optional<double> tol_psd;
  long samples = 10000;           // per containment family
  std::uint64_t seed = 1;
  int workers = 1;
  double margin = 1e-7;           // allowed pointwise violation
  std::optional<std::vector<double>> box_lo;  // user sampling box
  std::optional<std::vector<double>> box_hi;
};

VerificationReport check_algebraic(const Certificate& cert, const ProblemSpec& spec,
                                   std::optional<double> tol_res = std::nullopt,
                                   std::optional<double> tol_psd = std::nullopt);

VerificationReport check_containments(const Certificate& cert, const ProblemSpec& spec,
                                      const CertifyOptions& opts = {});

/// Both checks merged.
VerificationReport certify(const Certificate& cert, const ProblemSpec& spec,
                           const CertifyOptions& opts = {});

// ---------------------------------------------------------------------------
// Level-set sampling, shared with the simulation module.

/// SplitMix64 generator; every sample index gets its own substream so
/// results do not depend on how samples are split among workers.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next();
  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  static std::uint64_t substream(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t s_;
};

/// Level gamma + R^2 q(t) of the certified set at time t.
double certified_level(const Certificate& cert, const ProblemSpec& spec, double t);

struct Box {
  std::vector<double> lo, hi;
};

/// Axis-aligned box around {x : V(t,x) <= level(t)} for the given times,
/// from ray searches out of an interior point, widened by 20%. Throws
/// SamplingError if the set is empty at every time or appears unbounded.
Box level_set_box(const Certificate& cert, const ProblemSpec& spec,
                  const std::vector<double>& times);

/// Rejection sampler for points of the certified funnel.
class LevelSetSampler {
 public:
  /// With `fixed_t`, samples only that time slice.
  LevelSetSampler(const Certificate& cert, const ProblemSpec& spec,
                  std::optional<double> fixed_t = std::nullopt,
                  std::optional<Box> box = std::nullopt);

  struct Point {
    double t = 0.0;
    std::vector<double> x;
  };
  /// Draws sample `index` of the stream `seed`; nullopt if 10^5 draws all
  /// missed. `attempts` accumulates the number of draws.
  std::optional<Point> draw(std::uint64_t seed, std::uint64_t index, long* attempts) const;
  const Box& box() const { return box_; }

 private:
  const Certificate& cert_;
  const ProblemSpec& spec_;
  std::optional<double> fixed_t_;
  Box box_;
  CompiledPolynomial V_;
  CompiledPolynomial budget_;
};

}  // namespace brs
