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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "brs/polynomial.h"

namespace brs::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// ConicProblem

int ConicProblem::num_vars() const {
  int n = num_free + num_nonneg;
  for (int s : psd_sizes) n += tri_size(s);
  return n;
}

int ConicProblem::psd_offset(int block) const {
  int off = num_free + num_nonneg;
  for (int k = 0; k < block; ++k) off += tri_size(psd_sizes[k]);
  return off;
}

int ConicProblem::tri_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle: rows 0..i-1 hold n + (n-1) + ... entries.
  return i * n - i * (i - 1) / 2 + (j - i);
}

void ConicProblem::validate() const {
  if (num_free < 0 || num_nonneg < 0) throw SdpError("negative cone size");
  for (int s : psd_sizes) {
    if (s <= 0) throw SdpError("PSD block size must be positive");
  }
  const int n = num_vars();
  if (static_cast<int>(c.size()) != n) throw SdpError("objective length mismatch");
  if (!var_names.empty() && static_cast<int>(var_names.size()) != n) {
    throw SdpError("variable name map length mismatch");
  }
  for (const auto& t : A) {
    if (t.row < 0 || t.row >= num_rows() || t.col < 0 || t.col >= n) {
      throw SdpError("equality triplet out of range");
    }
    if (!std::isfinite(t.value)) throw SdpError("non-finite equality coefficient");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw SdpError("non-finite right-hand side");
  }
  for (double v : c) {
    if (!std::isfinite(v)) throw SdpError("non-finite objective");
  }
}

std::string ConicProblem::serialize() const {
  std::ostringstream os;
  os << "conic-problem v1\n";
  os << "free " << num_free << "\n";
  os << "nonneg " << num_nonneg << "\n";
  os << "psd " << psd_sizes.size();
  for (int s : psd_sizes) os << ' ' << s;
  os << "\nrows " << num_rows() << "\n";
  int nnz = 0;
  for (double v : c) nnz += v != 0.0;
  os << "objective " << nnz << "\n";
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] != 0.0) os << j << ' ' << format_double(c[j]) << "\n";
  }
  os << "equalities " << A.size() << "\n";
  for (const auto& t : A) {
    os << t.row << ' ' << t.col << ' ' << format_double(t.value) << "\n";
  }
  nnz = 0;
  for (double v : b) nnz += v != 0.0;
  os << "rhs " << nnz << "\n";
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] != 0.0) os << i << ' ' << format_double(b[i]) << "\n";
  }
  os << "end\n";
  return os.str();
}

ConicProblem ConicProblem::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  auto expect = [&](const char* word) {
    std::string w;
    if (!(is >> w) || w != word) {
      throw SdpError(std::string("conic problem text: expected '") + word + "'");
    }
  };
  ConicProblem cp;
  std::string header, version;
  is >> header >> version;
  if (header != "conic-problem" || version != "v1") {
    throw SdpError("conic problem text: bad header");
  }
  int m = 0, k = 0, nnz = 0;
  expect("free");
  is >> cp.num_free;
  expect("nonneg");
  is >> cp.num_nonneg;
  expect("psd");
  is >> k;
  cp.psd_sizes.resize(k);
  for (int& s : cp.psd_sizes) is >> s;
  expect("rows");
  is >> m;
  if (!is || m < 0 || k < 0) throw SdpError("conic problem text: bad sizes");
  cp.b.assign(m, 0.0);
  cp.c.assign(cp.num_vars(), 0.0);
  expect("objective");
  is >> nnz;
  for (int i = 0; i < nnz; ++i) {
    int j;
    double v;
    is >> j >> v;
    if (!is || j < 0 || j >= static_cast<int>(cp.c.size())) {
      throw SdpError("conic problem text: bad objective entry");
    }
    cp.c[j] = v;
  }
  expect("equalities");
  is >> nnz;
  cp.A.resize(nnz);
  for (auto& t : cp.A) is >> t.row >> t.col >> t.value;
  expect("rhs");
  is >> nnz;
  for (int i = 0; i < nnz; ++i) {
    int r;
    double v;
    is >> r >> v;
    if (!is || r < 0 || r >= m) throw SdpError("conic problem text: bad rhs entry");
    cp.b[r] = v;
  }
  expect("end");
  cp.validate();
  return cp;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kMaxIter: return "max-iter";
    case Status::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

double min_eig(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw SdpError("min_eig: matrix is not square");
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw SdpError("min_eig: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

MatrixXd block_matrix(const ConicProblem& cp, std::span<const double> x, int k) {
  const int n = cp.psd_sizes.at(k);
  const int off = cp.psd_offset(k);
  MatrixXd X(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      X(i, j) = X(j, i) = x[off + ConicProblem::tri_index(n, i, j)];
    }
  }
  return X;
}

// ---------------------------------------------------------------------------
// Interior-point backend

namespace {

// a * (e_p e_q' + e_q e_p') for p != q, a * e_p e_p' for p == q.
struct SymEntry {
  int p;
  int q;
  double a;
};

struct BlockData {
  int n = 0;
  std::vector<int> rows;                       // rows touching the block
  std::vector<std::vector<SymEntry>> entries;  // aligned with rows
  MatrixXd C;
};

struct Scaling {
  MatrixXd R;
  MatrixXd Rinv;
  MatrixXd W;
  VectorXd lambda;
};

struct Iterate {
  std::vector<MatrixXd> X, S;
  VectorXd xl, sl, xf, y;
  double tau = 1.0;
  double kappa = 1.0;
};

struct Direction {
  std::vector<MatrixXd> dX, dS;
  VectorXd dxl, dsl, dxf, dy;
  double dtau = 0.0;
  double dkappa = 0.0;
};

double inner(const MatrixXd& a, const MatrixXd& b) { return (a.array() * b.array()).sum(); }

// tr(E_f W E_e W) for symmetric unit matrices E_e, E_f.
double pair_trace(const SymEntry& e, const SymEntry& f, const MatrixXd& W) {
  const int p = e.p, q = e.q, r = f.p, s = f.q;
  if (p != q && r != s) return 2.0 * (W(s, p) * W(q, r) + W(s, q) * W(p, r));
  if (p == q && r != s) return 2.0 * W(s, p) * W(p, r);
  if (p != q && r == s) return 2.0 * W(r, p) * W(q, r);
  return W(r, p) * W(r, p);
}

class Ipm {
 public:
  Ipm(const ConicProblem& cp, const SolverOptions& opts) : cp_(cp), opts_(opts) {
    setup();
  }

  ConicSolution run();

 private:
  void setup();

  // Linear maps.
  VectorXd apply_A(const std::vector<MatrixXd>& X, const VectorXd& xl,
                   const VectorXd& xf) const;
  void apply_At(const VectorXd& y, std::vector<MatrixXd>& out_blocks,
                VectorXd& out_lin, VectorXd& out_free) const;
  double c_dot(const std::vector<MatrixXd>& X, const VectorXd& xl,
               const VectorXd& xf) const;

  bool compute_scalings();
  void assemble_schur();
  VectorXd solve_kkt(const VectorXd& rhs) const;
  bool compute_direction(double eta, const std::vector<MatrixXd>& Hc,
                         const VectorXd& hl, double htau, Direction& d);
  double max_step(const Direction& d) const;
  void residuals();
  ConicSolution finish(Status st) const;

  struct Measures {
    double pres = 0.0, dres = 0.0, relgap = 0.0, pobj = 0.0, dobj = 0.0;
    double merit() const { return std::max({pres, dres, relgap}); }
  };
  // Scaled residuals and gap of the current iterate (refreshes residuals).
  Measures measure();
  void take(const Iterate& from, const Direction& d, double alpha);
  // Non-optimal exit from the most accurate iterate seen.
  ConicSolution give_up(Status st);

  const ConicProblem& cp_;
  SolverOptions opts_;

  int m_ = 0, nf_ = 0, nl_ = 0;
  double nu_ = 0.0;
  VectorXd b_, cf_, cl_, row_scale_;
  MatrixXd Af_;
  std::vector<std::vector<std::pair<int, double>>> lin_cols_;
  std::vector<BlockData> blocks_;
  double bnorm_ = 1.0, cnorm_ = 1.0;

  Iterate it_;
  std::vector<Scaling> sc_;
  VectorXd wl_, laml_;
  MatrixXd K_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  VectorXd p2_, q2_;
  std::vector<MatrixXd> u2_;
  VectorXd u2l_;

  // Residuals of the embedding.
  VectorXd rp_, rf_, rdl_;
  std::vector<MatrixXd> rd_;
  double rg_ = 0.0, mu_ = 0.0;
  int iter_ = 0;

  Iterate best_;
  double best_merit_ = std::numeric_limits<double>::infinity();
  double merit_ = std::numeric_limits<double>::infinity();
};

ConicSolution Ipm::give_up(Status st) {
  if (best_merit_ < merit_) {
    it_ = best_;
    residuals();
  }
  return finish(st);
}

void Ipm::setup() {
  cp_.validate();
  m_ = cp_.num_rows();
  nf_ = cp_.num_free;
  nl_ = cp_.num_nonneg;
  const int nb = static_cast<int>(cp_.psd_sizes.size());

  // Row equilibration by the largest coefficient of each row.
  row_scale_ = VectorXd::Ones(m_);
  {
    VectorXd rmax = VectorXd::Zero(m_);
    for (const auto& t : cp_.A) rmax(t.row) = std::max(rmax(t.row), std::abs(t.value));
    for (int i = 0; i < m_; ++i) {
      if (rmax(i) > 0.0) row_scale_(i) = 1.0 / rmax(i);
    }
  }
  b_.resize(m_);
  for (int i = 0; i < m_; ++i) b_(i) = cp_.b[i] * row_scale_(i);

  // Column kinds.
  std::vector<int> col_block(cp_.num_vars(), -1);
  std::vector<std::pair<int, int>> col_ij(cp_.num_vars(), {0, 0});
  for (int k = 0; k < nb; ++k) {
    const int n = cp_.psd_sizes[k];
    const int off = cp_.psd_offset(k);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const int col = off + ConicProblem::tri_index(n, i, j);
        col_block[col] = k;
        col_ij[col] = {i, j};
      }
    }
  }

  Af_ = MatrixXd::Zero(m_, nf_);
  cf_ = VectorXd::Zero(nf_);
  cl_ = VectorXd::Zero(nl_);
  lin_cols_.assign(nl_, {});
  blocks_.resize(nb);
  for (int k = 0; k < nb; ++k) {
    blocks_[k].n = cp_.psd_sizes[k];
    blocks_[k].C = MatrixXd::Zero(blocks_[k].n, blocks_[k].n);
  }
  std::vector<std::map<int, std::vector<SymEntry>>> by_row(nb);
  for (const auto& t : cp_.A) {
    const double v = t.value * row_scale_(t.row);
    if (v == 0.0) continue;
    if (t.col < nf_) {
      Af_(t.row, t.col) += v;
    } else if (t.col < nf_ + nl_) {
      lin_cols_[t.col - nf_].push_back({t.row, v});
    } else {
      const int k = col_block[t.col];
      const auto [i, j] = col_ij[t.col];
      by_row[k][t.row].push_back({i, j, i == j ? v : 0.5 * v});
    }
  }
  for (int k = 0; k < nb; ++k) {
    for (auto& [row, ents] : by_row[k]) {
      blocks_[k].rows.push_back(row);
      blocks_[k].entries.push_back(std::move(ents));
    }
  }
  for (int j = 0; j < cp_.num_vars(); ++j) {
    const double v = cp_.c[j];
    if (v == 0.0) continue;
    if (j < nf_) {
      cf_(j) = v;
    } else if (j < nf_ + nl_) {
      cl_(j - nf_) = v;
    } else {
      const int k = col_block[j];
      const auto [i, jj] = col_ij[j];
      if (i == jj) {
        blocks_[k].C(i, i) += v;
      } else {
        blocks_[k].C(i, jj) += 0.5 * v;
        blocks_[k].C(jj, i) += 0.5 * v;
      }
    }
  }

  nu_ = nl_;
  for (const auto& blk : blocks_) nu_ += blk.n;

  bnorm_ = 1.0 + b_.norm();
  double cn2 = cf_.squaredNorm() + cl_.squaredNorm();
  for (const auto& blk : blocks_) cn2 += blk.C.squaredNorm();
  cnorm_ = 1.0 + std::sqrt(cn2);

  // Standard HSD starting point.
  it_.X.clear();
  it_.S.clear();
  for (const auto& blk : blocks_) {
    it_.X.push_back(MatrixXd::Identity(blk.n, blk.n));
    it_.S.push_back(MatrixXd::Identity(blk.n, blk.n));
  }
  it_.xl = VectorXd::Ones(nl_);
  it_.sl = VectorXd::Ones(nl_);
  it_.xf = VectorXd::Zero(nf_);
  it_.y = VectorXd::Zero(m_);
  it_.tau = 1.0;
  it_.kappa = 1.0;
}

VectorXd Ipm::apply_A(const std::vector<MatrixXd>& X, const VectorXd& xl,
                      const VectorXd& xf) const {
  VectorXd r = VectorXd::Zero(m_);
  if (nf_ > 0) r += Af_ * xf;
  for (int l = 0; l < nl_; ++l) {
    for (const auto& [row, v] : lin_cols_[l]) r(row) += v * xl(l);
  }
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    const MatrixXd& Xk = X[k];
    for (std::size_t ri = 0; ri < blk.rows.size(); ++ri) {
      double s = 0.0;
      for (const auto& e : blk.entries[ri]) {
        s += e.p == e.q ? e.a * Xk(e.p, e.p) : 2.0 * e.a * Xk(e.p, e.q);
      }
      r(blk.rows[ri]) += s;
    }
  }
  return r;
}

void Ipm::apply_At(const VectorXd& y, std::vector<MatrixXd>& out_blocks,
                   VectorXd& out_lin, VectorXd& out_free) const {
  out_blocks.resize(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    MatrixXd& B = out_blocks[k];
    B = MatrixXd::Zero(blk.n, blk.n);
    for (std::size_t ri = 0; ri < blk.rows.size(); ++ri) {
      const double yi = y(blk.rows[ri]);
      if (yi == 0.0) continue;
      for (const auto& e : blk.entries[ri]) {
        B(e.p, e.q) += yi * e.a;
        if (e.p != e.q) B(e.q, e.p) += yi * e.a;
      }
    }
  }
  out_lin = VectorXd::Zero(nl_);
  for (int l = 0; l < nl_; ++l) {
    for (const auto& [row, v] : lin_cols_[l]) out_lin(l) += v * y(row);
  }
  out_free = nf_ > 0 ? VectorXd(Af_.transpose() * y) : VectorXd::Zero(0);
}

double Ipm::c_dot(const std::vector<MatrixXd>& X, const VectorXd& xl,
                  const VectorXd& xf) const {
  double s = cl_.dot(xl) + cf_.dot(xf);
  for (std::size_t k = 0; k < blocks_.size(); ++k) s += inner(blocks_[k].C, X[k]);
  return s;
}

void Ipm::residuals() {
  rp_ = b_ * it_.tau - apply_A(it_.X, it_.xl, it_.xf);
  std::vector<MatrixXd> aty;
  VectorXd atl, atf;
  apply_At(it_.y, aty, atl, atf);
  rd_.resize(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    rd_[k] = blocks_[k].C * it_.tau - aty[k] - it_.S[k];
  }
  rdl_ = cl_ * it_.tau - atl - it_.sl;
  rf_ = cf_ * it_.tau - atf;
  rg_ = it_.kappa + c_dot(it_.X, it_.xl, it_.xf) - b_.dot(it_.y);
  double comp = it_.xl.dot(it_.sl) + it_.tau * it_.kappa;
  for (std::size_t k = 0; k < blocks_.size(); ++k) comp += inner(it_.X[k], it_.S[k]);
  mu_ = comp / (nu_ + 1.0);
}

bool Ipm::compute_scalings() {
  sc_.resize(blocks_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    Eigen::LLT<MatrixXd> lx(it_.X[k]);
    Eigen::LLT<MatrixXd> ls(it_.S[k]);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    const MatrixXd L1 = lx.matrixL();
    const MatrixXd L2 = ls.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(L2.transpose() * L1,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd lam = svd.singularValues();
    if (!(lam.minCoeff() > 0.0) || !lam.allFinite()) return false;
    const VectorXd isq = lam.array().sqrt().inverse();
    const VectorXd sq = lam.array().sqrt();
    Scaling& s = sc_[k];
    s.lambda = lam;
    s.R = L1 * svd.matrixV() * isq.asDiagonal();
    const MatrixXd L1inv =
        L1.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(L1.rows(), L1.cols()));
    s.Rinv = sq.asDiagonal() * svd.matrixV().transpose() * L1inv;
    s.W = s.R * s.R.transpose();
    s.W = 0.5 * (s.W + s.W.transpose());
  }
  wl_ = (it_.xl.array() / it_.sl.array()).sqrt();
  laml_ = (it_.xl.array() * it_.sl.array()).sqrt();
  return wl_.allFinite() && laml_.allFinite();
}

void Ipm::assemble_schur() {
  const int dim = m_ + nf_;
  K_ = MatrixXd::Zero(dim, dim);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    const MatrixXd& W = sc_[k].W;
    const std::size_t nr = blk.rows.size();
    for (std::size_t a = 0; a < nr; ++a) {
      const auto& ea = blk.entries[a];
      for (std::size_t c = a; c < nr; ++c) {
        const auto& ec = blk.entries[c];
        double s = 0.0;
        for (const auto& e : ea) {
          for (const auto& f : ec) s += e.a * f.a * pair_trace(e, f, W);
        }
        K_(blk.rows[a], blk.rows[c]) += s;
        if (c != a) K_(blk.rows[c], blk.rows[a]) += s;
      }
    }
  }
  for (int l = 0; l < nl_; ++l) {
    const double w2 = wl_(l) * wl_(l);
    for (const auto& [ri, vi] : lin_cols_[l]) {
      for (const auto& [rj, vj] : lin_cols_[l]) K_(ri, rj) += w2 * vi * vj;
    }
  }
  if (nf_ > 0) {
    K_.block(0, m_, m_, nf_) = Af_;
    K_.block(m_, 0, nf_, m_) = Af_.transpose();
  }
  double dmax = 0.0;
  for (int i = 0; i < m_; ++i) dmax = std::max(dmax, K_(i, i));
  const double reg = 1e-13 * std::max(dmax, 1.0);
  MatrixXd Kreg = K_;
  for (int i = 0; i < m_; ++i) Kreg(i, i) += reg;
  for (int i = m_; i < dim; ++i) Kreg(i, i) -= reg;
  lu_.compute(Kreg);
}

VectorXd Ipm::solve_kkt(const VectorXd& rhs) const {
  VectorXd x = lu_.solve(rhs);
  // Iterative refinement against the unregularized matrix.
  double last = std::numeric_limits<double>::infinity();
  for (int r = 0; r < 10; ++r) {
    const VectorXd res = rhs - K_ * x;
    const double nr = res.cwiseAbs().maxCoeff();
    if (!(nr < 0.5 * last) || nr <= 1e-15 * (1.0 + rhs.cwiseAbs().maxCoeff())) break;
    last = nr;
    x += lu_.solve(res);
  }
  return x;
}

bool Ipm::compute_direction(double eta, const std::vector<MatrixXd>& Hc,
                            const VectorXd& hl, double htau, Direction& d) {
  const std::size_t nb = blocks_.size();
  std::vector<MatrixXd> G(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const VectorXd& lam = sc_[k].lambda;
    const int n = blocks_[k].n;
    MatrixXd Z(n, n);
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) Z(p, q) = 2.0 * Hc[k](p, q) / (lam(p) + lam(q));
    }
    G[k] = sc_[k].R * Z * sc_[k].R.transpose() - eta * (sc_[k].W * rd_[k] * sc_[k].W);
  }
  const VectorXd zl = hl.array() / laml_.array();
  const VectorXd Gl = (wl_.array() * zl.array() - eta * wl_.array().square() * rdl_.array()).matrix();

  VectorXd rhs(m_ + nf_);
  rhs.head(m_) = eta * rp_ - apply_A(G, Gl, VectorXd::Zero(nf_));
  if (nf_ > 0) rhs.tail(nf_) = eta * rf_;
  const VectorXd sol = solve_kkt(rhs);
  const VectorXd p1 = sol.head(m_);
  const VectorXd q1 = sol.tail(nf_);

  std::vector<MatrixXd> atp;
  VectorXd atpl, atpf;
  apply_At(p1, atp, atpl, atpf);
  std::vector<MatrixXd> u1(nb);
  for (std::size_t k = 0; k < nb; ++k) u1[k] = G[k] + sc_[k].W * atp[k] * sc_[k].W;
  const VectorXd u1l = Gl + (wl_.array().square() * atpl.array()).matrix();

  const double num = eta * rg_ + c_dot(u1, u1l, VectorXd::Zero(nf_)) + cf_.dot(q1) -
                     b_.dot(p1) + htau / it_.tau;
  const double den = -c_dot(u2_, u2l_, VectorXd::Zero(nf_)) - cf_.dot(q2_) + b_.dot(p2_) +
                     it_.kappa / it_.tau;
  if (!std::isfinite(num) || !std::isfinite(den) || std::abs(den) < 1e-300) return false;
  d.dtau = num / den;
  d.dy = p1 + d.dtau * p2_;
  d.dxf = q1 + d.dtau * q2_;
  d.dX.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) d.dX[k] = u1[k] + d.dtau * u2_[k];
  d.dxl = u1l + d.dtau * u2l_;
  for (std::size_t k = 0; k < nb; ++k) d.dX[k] = 0.5 * (d.dX[k] + d.dX[k].transpose());

  // The Schur right-hand side is dominated by terms far larger than the
  // residuals it must reproduce, so the primal equation is only met to
  // round-off of those terms. Correct along directions that leave the dual
  // and complementarity equations untouched.
  std::vector<MatrixXd> atdy;
  VectorXd atdyl, atdyf;
  apply_At(d.dy, atdy, atdyl, atdyf);
  // A correction is kept only if it shrinks the residual: on rank-deficient
  // systems it can point anywhere.
  auto eq_residual = [&]() {
    VectorXd e(m_ + nf_);
    e.head(m_) = eta * rp_ + b_ * d.dtau - apply_A(d.dX, d.dxl, d.dxf);
    if (nf_ > 0) e.tail(nf_) = eta * rf_ + cf_ * d.dtau - atdyf;
    return e;
  };
  VectorXd e = eq_residual();
  for (int r = 0; r < 2 && e.allFinite() && e.cwiseAbs().maxCoeff() > 1e-15; ++r) {
    const Direction keep = d;
    const std::vector<MatrixXd> keep_at = atdy;
    const VectorXd keep_atl = atdyl, keep_atf = atdyf;
    const VectorXd de = solve_kkt(e);
    std::vector<MatrixXd> atd;
    VectorXd atdl, atdf;
    apply_At(de.head(m_), atd, atdl, atdf);
    d.dy += de.head(m_);
    if (nf_ > 0) d.dxf += de.tail(nf_);
    for (std::size_t k = 0; k < nb; ++k) {
      const MatrixXd w = sc_[k].W * atd[k] * sc_[k].W;
      d.dX[k] += 0.5 * (w + w.transpose());
      atdy[k] += atd[k];
    }
    d.dxl += (wl_.array().square() * atdl.array()).matrix();
    atdyl += atdl;
    atdyf += atdf;
    const VectorXd e2 = eq_residual();
    if (!e2.allFinite() || e2.norm() >= 0.5 * e.norm()) {
      d = keep;
      atdy = keep_at;
      atdyl = keep_atl;
      atdyf = keep_atf;
      break;
    }
    e = e2;
  }
  d.dS.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    d.dS[k] = eta * rd_[k] - atdy[k] + blocks_[k].C * d.dtau;
    d.dS[k] = 0.5 * (d.dS[k] + d.dS[k].transpose());
  }
  d.dsl = eta * rdl_ - atdyl + cl_ * d.dtau;
  d.dkappa = (htau - it_.kappa * d.dtau) / it_.tau;
  return d.dy.allFinite() && std::isfinite(d.dkappa);
}

double Ipm::max_step(const Direction& d) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const Scaling& s = sc_[k];
    const VectorXd isq = s.lambda.array().sqrt().inverse();
    const MatrixXd dxs = isq.asDiagonal() * (s.Rinv * d.dX[k] * s.Rinv.transpose()) *
                         isq.asDiagonal();
    const MatrixXd dss =
        isq.asDiagonal() * (s.R.transpose() * d.dS[k] * s.R) * isq.asDiagonal();
    for (const MatrixXd* m : {&dxs, &dss}) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (*m + m->transpose()),
                                                 Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues()(0);
      if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    }
  }
  for (int l = 0; l < nl_; ++l) {
    if (d.dxl(l) < 0.0) alpha = std::min(alpha, -it_.xl(l) / d.dxl(l));
    if (d.dsl(l) < 0.0) alpha = std::min(alpha, -it_.sl(l) / d.dsl(l));
  }
  if (d.dtau < 0.0) alpha = std::min(alpha, -it_.tau / d.dtau);
  if (d.dkappa < 0.0) alpha = std::min(alpha, -it_.kappa / d.dkappa);
  return alpha;
}

ConicSolution Ipm::finish(Status st) const {
  ConicSolution sol;
  sol.status = st;
  sol.iterations = iter_;
  const int n = cp_.num_vars();
  sol.x.assign(n, 0.0);
  sol.y.assign(m_, 0.0);

  double xs = 1.0 / it_.tau;
  double ys = 1.0 / it_.tau;
  if (st == Status::kInfeasible) {
    xs = 0.0;
    ys = 1.0 / b_.dot(it_.y);
  } else if (st == Status::kUnbounded) {
    xs = -1.0 / c_dot(it_.X, it_.xl, it_.xf);
    ys = 0.0;
  }
  for (int j = 0; j < nf_; ++j) sol.x[j] = it_.xf(j) * xs;
  for (int l = 0; l < nl_; ++l) sol.x[nf_ + l] = it_.xl(l) * xs;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const int nb = blocks_[k].n;
    const int off = cp_.psd_offset(static_cast<int>(k));
    for (int i = 0; i < nb; ++i) {
      for (int j = i; j < nb; ++j) {
        sol.x[off + ConicProblem::tri_index(nb, i, j)] = it_.X[k](i, j) * xs;
      }
    }
  }
  for (int i = 0; i < m_; ++i) sol.y[i] = it_.y(i) * row_scale_(i) * ys;

  // Report residuals of the returned point in the original data.
  VectorXd ax = VectorXd::Zero(m_);
  for (const auto& t : cp_.A) ax(t.row) += t.value * sol.x[t.col];
  double pobj = 0.0;
  for (int j = 0; j < n; ++j) pobj += cp_.c[j] * sol.x[j];
  double dobj = 0.0;
  for (int i = 0; i < m_; ++i) dobj += cp_.b[i] * sol.y[i];
  sol.primal_objective = pobj;
  sol.dual_objective = dobj;
  if (st != Status::kInfeasible && st != Status::kUnbounded) {
    Eigen::Map<const VectorXd> bo(cp_.b.data(), m_);
    sol.primal_residual = m_ > 0 ? (ax - bo).cwiseAbs().maxCoeff() : 0.0;
    double dr = (rf_.size() ? rf_.cwiseAbs().maxCoeff() : 0.0);
    for (const auto& r : rd_) dr = std::max(dr, r.cwiseAbs().maxCoeff());
    if (rdl_.size()) dr = std::max(dr, rdl_.cwiseAbs().maxCoeff());
    sol.dual_residual = dr / it_.tau;
    double comp = it_.xl.dot(it_.sl);
    for (std::size_t k = 0; k < blocks_.size(); ++k) comp += inner(it_.X[k], it_.S[k]);
    sol.gap = comp / (it_.tau * it_.tau);
  }
  return sol;
}

Ipm::Measures Ipm::measure() {
  residuals();
  Measures m;
  const double tau = it_.tau;
  m.pres = rp_.norm() / tau / bnorm_;
  double dn2 = rf_.squaredNorm() + rdl_.squaredNorm();
  for (const auto& r : rd_) dn2 += r.squaredNorm();
  m.dres = std::sqrt(dn2) / tau / cnorm_;
  m.pobj = c_dot(it_.X, it_.xl, it_.xf) / tau;
  m.dobj = b_.dot(it_.y) / tau;
  double comp = it_.xl.dot(it_.sl);
  for (std::size_t k = 0; k < blocks_.size(); ++k) comp += inner(it_.X[k], it_.S[k]);
  const double gap = comp / (tau * tau);
  m.relgap = std::max(gap, std::abs(m.pobj - m.dobj)) / (1.0 + std::abs(m.pobj) + std::abs(m.dobj));
  return m;
}

void Ipm::take(const Iterate& from, const Direction& d, double alpha) {
  it_ = from;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    it_.X[k] += alpha * d.dX[k];
    it_.S[k] += alpha * d.dS[k];
  }
  it_.xl += alpha * d.dxl;
  it_.sl += alpha * d.dsl;
  it_.xf += alpha * d.dxf;
  it_.y += alpha * d.dy;
  it_.tau += alpha * d.dtau;
  it_.kappa += alpha * d.dkappa;
}

ConicSolution Ipm::run() {
  const std::size_t nb = blocks_.size();
  if (m_ == 0 && nf_ == 0 && nl_ == 0 && nb == 0) {
    ConicSolution sol;
    sol.status = Status::kOptimal;
    return sol;
  }
  int stall = 0;
  int flat = 0;
  double mu_ref = std::numeric_limits<double>::infinity();
  for (iter_ = 0; iter_ <= opts_.max_iter; ++iter_) {
    const Measures ms = measure();
    const double pres = ms.pres, dres = ms.dres, relgap = ms.relgap;
    const double pobj = ms.pobj, dobj = ms.dobj, tau = it_.tau;
    merit_ = ms.merit();
    if (merit_ < best_merit_) {
      best_merit_ = merit_;
      best_ = it_;
    }
    if (opts_.verbose) {
      std::fprintf(stderr,
                   "ipm %3d pobj % .8e dobj % .8e pres %.2e dres %.2e gap %.2e tau %.2e "
                   "kappa %.2e mu %.2e\n",
                   iter_, pobj, dobj, pres, dres, relgap, tau, it_.kappa, mu_);
    }
    if (pres <= opts_.feas_tol && dres <= opts_.feas_tol && relgap <= opts_.gap_tol) {
      return finish(Status::kOptimal);
    }
    // Farkas certificates, normalized by the ray's objective.
    const double by = b_.dot(it_.y);
    if (by > 0.0) {
      std::vector<MatrixXd> aty;
      VectorXd atl, atf;
      apply_At(it_.y, aty, atl, atf);
      double r2 = atf.squaredNorm() + (atl + it_.sl).squaredNorm();
      for (std::size_t k = 0; k < nb; ++k) r2 += (aty[k] + it_.S[k]).squaredNorm();
      if (std::sqrt(r2) / by <= opts_.feas_tol) return finish(Status::kInfeasible);
    }
    const double cx = c_dot(it_.X, it_.xl, it_.xf);
    if (cx < 0.0) {
      const double ax = apply_A(it_.X, it_.xl, it_.xf).norm();
      if (ax / -cx <= opts_.feas_tol) return finish(Status::kUnbounded);
    }
    if (iter_ == opts_.max_iter) break;
    // Progress stalls when the iterate sits at the attainable accuracy of
    // an ill-posed problem; stop instead of spinning to the iteration cap.
    if (mu_ < 0.95 * mu_ref) {
      mu_ref = mu_;
      flat = 0;
    } else if (++flat >= 10) {
      return give_up(Status::kNumericalFailure);
    }

    if (!compute_scalings()) return give_up(Status::kNumericalFailure);
    assemble_schur();

    // Second right-hand side shared by predictor and corrector.
    {
      VectorXd rhs2(m_ + nf_);
      std::vector<MatrixXd> WCW(nb);
      for (std::size_t k = 0; k < nb; ++k) WCW[k] = sc_[k].W * blocks_[k].C * sc_[k].W;
      const VectorXd wcl = (wl_.array().square() * cl_.array()).matrix();
      rhs2.head(m_) = apply_A(WCW, wcl, VectorXd::Zero(nf_)) + b_;
      if (nf_ > 0) rhs2.tail(nf_) = cf_;
      const VectorXd sol2 = solve_kkt(rhs2);
      p2_ = sol2.head(m_);
      q2_ = sol2.tail(nf_);
      std::vector<MatrixXd> atp;
      VectorXd atpl, atpf;
      apply_At(p2_, atp, atpl, atpf);
      u2_.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        u2_[k] = sc_[k].W * (atp[k] - blocks_[k].C) * sc_[k].W;
      }
      u2l_ = (wl_.array().square() * (atpl - cl_).array()).matrix();
    }

    // Predictor.
    std::vector<MatrixXd> Hc(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      Hc[k] = -MatrixXd(sc_[k].lambda.array().square().matrix().asDiagonal());
    }
    VectorXd hl = -laml_.array().square().matrix();
    Direction da;
    if (!compute_direction(1.0, Hc, hl, -it_.tau * it_.kappa, da)) {
      return give_up(Status::kNumericalFailure);
    }
    const double alpha_a = std::min(1.0, max_step(da));
    const double sigma = std::clamp(std::pow(1.0 - alpha_a, 3.0), 0.0, 1.0);

    // Corrector with the second-order term in the scaled space.
    for (std::size_t k = 0; k < nb; ++k) {
      const Scaling& s = sc_[k];
      const MatrixXd dxs = s.Rinv * da.dX[k] * s.Rinv.transpose();
      const MatrixXd dss = s.R.transpose() * da.dS[k] * s.R;
      const MatrixXd jord = 0.5 * (dxs * dss + dss * dxs);
      Hc[k] = sigma * mu_ * MatrixXd::Identity(blocks_[k].n, blocks_[k].n) -
              MatrixXd(s.lambda.array().square().matrix().asDiagonal()) - jord;
    }
    {
      const VectorXd dxs = da.dxl.array() / wl_.array();
      const VectorXd dss = da.dsl.array() * wl_.array();
      hl = (sigma * mu_ - laml_.array().square() - dxs.array() * dss.array()).matrix();
    }
    const double htau = sigma * mu_ - it_.tau * it_.kappa - da.dtau * da.dkappa;
    Direction d;
    if (!compute_direction(1.0 - sigma, Hc, hl, htau, d)) {
      return give_up(Status::kNumericalFailure);
    }
    const double alpha = std::min(1.0, 0.99 * max_step(d));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) return give_up(Status::kNumericalFailure);
    stall = alpha < 1e-8 ? stall + 1 : 0;
    if (stall >= 3) return give_up(Status::kNumericalFailure);

    // Near the solution a direction spoiled by round-off can throw the
    // iterate far off the central path; shorten such steps.
    const Iterate from = it_;
    double a = alpha;
    for (int cut = 0;; ++cut) {
      take(from, d, a);
      if (merit_ > 1e-4 || cut == 6) break;
      if (it_.tau > 0.0 && it_.kappa > 0.0 && measure().merit() <= 2.0 * merit_) break;
      a *= 0.25;
    }
    if (!(it_.tau > 0.0) || !(it_.kappa > 0.0)) return give_up(Status::kNumericalFailure);
  }
  return give_up(Status::kMaxIter);
}

}  // namespace

ConicSolution InteriorPointSolver::solve(const ConicProblem& cp,
                                         const SolverOptions& opts) const {
  Ipm ipm(cp, opts);
  return ipm.run();
}

ConicSolution solve(const ConicProblem& cp, const SolverOptions& opts) {
  return InteriorPointSolver{}.solve(cp, opts);
}

}  // namespace brs::sdp
