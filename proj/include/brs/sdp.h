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

// Standard-form conic programs and a dense primal-dual interior-point
// backend.
//
//   minimize    c'x
//   subject to  A x = b,
//               x = (x_free, x_nonneg, X_1, ..., X_k),
//               x_nonneg >= 0,  X_j symmetric positive semidefinite.
//
// PSD blocks are stored by their upper triangle (i <= j, row-major), one
// scalar variable per entry. A coefficient a on an off-diagonal variable
// X_ij contributes a * X_ij to the row, i.e. the symmetric pair is folded
// into a single variable.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace brs::sdp {

class SdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct ConicProblem {
  int num_free = 0;
  int num_nonneg = 0;
  std::vector<int> psd_sizes;

  std::vector<double> c;      // length num_vars()
  std::vector<Triplet> A;     // equality system, sorted by (row, col)
  std::vector<double> b;      // length num_rows()

  // Optional human-readable source of every scalar variable.
  std::vector<std::string> var_names;

  int num_vars() const;
  int num_rows() const { return static_cast<int>(b.size()); }
  int psd_offset(int block) const;
  static int tri_size(int n) { return n * (n + 1) / 2; }
  /// Index of entry (i, j) (either order) inside a block's triangle.
  static int tri_index(int n, int i, int j);

  /// Throws SdpError if dimensions or indices are inconsistent.
  void validate() const;

  /// Sparse text format:
  ///   conic-problem v1
  ///   free <n>
  ///   nonneg <n>
  ///   psd <k> <n_1> ... <n_k>
  ///   rows <m>
  ///   objective <nnz>      followed by nnz lines "<col> <value>"
  ///   equalities <nnz>     followed by nnz lines "<row> <col> <value>"
  ///   rhs <nnz>            followed by nnz lines "<row> <value>"
  ///   end
  std::string serialize() const;
  static ConicProblem deserialize(std::string_view text);
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kMaxIter, kNumericalFailure };

const char* to_string(Status s);

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 100;
  bool verbose = false;
};

struct ConicSolution {
  Status status = Status::kNumericalFailure;
  std::vector<double> x;  // primal point (optimal) or primal ray (unbounded)
  std::vector<double> y;  // dual multipliers (optimal) or Farkas ray (infeasible)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

/// Pluggable backend. External solver adapters implement this interface and
/// consume either the ConicProblem or its serialized text.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual ConicSolution solve(const ConicProblem& cp,
                              const SolverOptions& opts) const = 0;
};

/// Homogeneous self-dual embedding, Nesterov-Todd scaling, Mehrotra
/// predictor-corrector, dense linear algebra.
class InteriorPointSolver final : public ConicSolver {
 public:
  ConicSolution solve(const ConicProblem& cp,
                      const SolverOptions& opts) const override;
};

/// Solves with the reference interior-point backend.
ConicSolution solve(const ConicProblem& cp, const SolverOptions& opts = {});

/// Smallest eigenvalue of a symmetric matrix. Throws SdpError if the input
/// is not symmetric to 1e-12 (relative to its largest entry).
double min_eig(const Eigen::MatrixXd& m);

/// Unpacks block `k` of a primal vector into a dense symmetric matrix.
Eigen::MatrixXd block_matrix(const ConicProblem& cp, std::span<const double> x,
                             int k);

}  // namespace brs::sdp
