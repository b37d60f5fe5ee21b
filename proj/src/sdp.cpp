#include "psksdr/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include "psksdr/error.hpp"

namespace psksdr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SymBlockMatrix::add(int block, int row, int col, double value) {
  if (row > col) std::swap(row, col);
  for (auto& e : entries_) {
    if (e.block == block && e.row == row && e.col == col) {
      e.value += value;
      return;
    }
  }
  entries_.push_back({block, row, col, value});
}

const char* to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::optimal: return "Optimal";
    case SolveStatus::max_iter: return "MaxIter";
    case SolveStatus::numerical_failure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

void check_entries(const SymBlockMatrix& coeffs, const std::vector<Cone>& blocks, const std::string& where) {
  for (const auto& e : coeffs.entries()) {
    if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) {
      throw Error(ErrorCode::dimension_mismatch, where + ": block index out of range");
    }
    const auto& cone = blocks[e.block];
    if (e.row < 0 || e.col >= cone.dim) {
      throw Error(ErrorCode::dimension_mismatch, where + ": entry outside its block");
    }
    if (cone.kind == ConeKind::nonneg && e.row != e.col) {
      throw Error(ErrorCode::invalid_parameter, where + ": nonneg block entries must be diagonal");
    }
    if (!std::isfinite(e.value)) {
      throw Error(ErrorCode::numerical, where + ": non-finite coefficient");
    }
  }
}

}  // namespace

void ConicProgram::validate() const {
  if (blocks.empty()) throw Error(ErrorCode::invalid_parameter, "program has no blocks");
  for (const auto& cone : blocks) {
    if (cone.dim < 1) throw Error(ErrorCode::invalid_parameter, "cone dimension must be positive");
  }
  if (constraints.empty()) throw Error(ErrorCode::invalid_parameter, "program has no constraints");
  check_entries(objective, blocks, "objective");
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    check_entries(constraints[k].coeffs, blocks, "constraint " + std::to_string(k));
    if (!std::isfinite(constraints[k].rhs)) {
      throw Error(ErrorCode::numerical, "constraint " + std::to_string(k) + ": non-finite rhs");
    }
  }
}

int ConicProgram::degree() const {
  int total = 0;
  for (const auto& cone : blocks) total += cone.dim;
  return total;
}

double inner(const SymBlockMatrix& coeffs, const BlockValues& X) {
  double acc = 0.0;
  for (const auto& e : coeffs.entries()) {
    const auto& block = X[e.block];
    if (block.cols() == 1) {
      acc += e.value * block(e.row, 0);
    } else if (e.row == e.col) {
      acc += e.value * block(e.row, e.col);
    } else {
      acc += e.value * (block(e.row, e.col) + block(e.col, e.row));
    }
  }
  return acc;
}

namespace {

MatrixXd dense_block(const SymBlockMatrix& coeffs, int block, const Cone& cone) {
  MatrixXd out = cone.kind == ConeKind::psd ? MatrixXd::Zero(cone.dim, cone.dim)
                                            : MatrixXd::Zero(cone.dim, 1);
  for (const auto& e : coeffs.entries()) {
    if (e.block != block) continue;
    if (cone.kind == ConeKind::nonneg) {
      out(e.row, 0) += e.value;
    } else {
      out(e.row, e.col) += e.value;
      if (e.row != e.col) out(e.col, e.row) += e.value;
    }
  }
  return out;
}

void check_shapes(const ConicProgram& program, const BlockValues& values, const char* what) {
  if (values.size() != program.blocks.size()) {
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + ": wrong number of blocks");
  }
  for (std::size_t b = 0; b < values.size(); ++b) {
    const auto& cone = program.blocks[b];
    const auto cols = cone.kind == ConeKind::psd ? cone.dim : 1;
    if (values[b].rows() != cone.dim || values[b].cols() != cols) {
      throw Error(ErrorCode::dimension_mismatch, std::string(what) + ": block " + std::to_string(b) + " has wrong shape");
    }
  }
}

}  // namespace

Residuals residuals(const ConicProgram& program, const BlockValues& X, const VectorXd& y,
                    const BlockValues& Z) {
  check_shapes(program, X, "residuals X");
  check_shapes(program, Z, "residuals Z");
  if (y.size() != static_cast<Eigen::Index>(program.constraints.size())) {
    throw Error(ErrorCode::dimension_mismatch, "residuals: dual vector has wrong length");
  }
  Residuals out;
  double dual_obj = 0.0;
  for (std::size_t k = 0; k < program.constraints.size(); ++k) {
    const auto& con = program.constraints[k];
    const double viol = std::abs(inner(con.coeffs, X) - con.rhs) / (1.0 + std::abs(con.rhs));
    out.primal = std::max(out.primal, viol);
    dual_obj += con.rhs * y[static_cast<Eigen::Index>(k)];
  }
  double c_max = 0.0;
  double d_max = 0.0;
  for (std::size_t b = 0; b < program.blocks.size(); ++b) {
    const int bi = static_cast<int>(b);
    MatrixXd R = dense_block(program.objective, bi, program.blocks[b]);
    c_max = std::max(c_max, R.cwiseAbs().maxCoeff());
    for (std::size_t k = 0; k < program.constraints.size(); ++k) {
      for (const auto& e : program.constraints[k].coeffs.entries()) {
        if (e.block != bi) continue;
        const double v = e.value * y[static_cast<Eigen::Index>(k)];
        if (program.blocks[b].kind == ConeKind::nonneg) {
          R(e.row, 0) -= v;
        } else {
          R(e.row, e.col) -= v;
          if (e.row != e.col) R(e.col, e.row) -= v;
        }
      }
    }
    R -= Z[b];
    d_max = std::max(d_max, R.cwiseAbs().maxCoeff());
  }
  out.dual = d_max / (1.0 + c_max);
  out.gap = inner(program.objective, X) - dual_obj;
  return out;
}

// ---------------------------------------------------------------------------
// Eigen helpers

SymEig sym_eig(const MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "sym_eig: matrix is not square");
  }
  if (!matrix.allFinite()) throw Error(ErrorCode::numerical, "sym_eig: non-finite entries");
  const MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::numerical, "sym_eig: no convergence");
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

MatrixXd nearest_psd(const MatrixXd& matrix) {
  const auto eig = sym_eig(matrix);
  const VectorXd clipped = eig.values.cwiseMax(0.0);
  return eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
}

double min_eigenvalue(const MatrixXd& matrix) {
  if (matrix.size() == 0) return 0.0;
  const MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[0];
}

double spectral_norm_sym(const MatrixXd& matrix) {
  if (matrix.size() == 0) return 0.0;
  const MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Interior point solver

namespace {

constexpr int kRefinementRounds = 2;

struct NumericalTrouble {
  const char* what;
};

// One infeasible primal-dual path following run, NT direction with a
// Mehrotra corrector. Real is double or long double.
template <class Real>
class InteriorPoint {
 public:
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  using Sparse = Eigen::SparseMatrix<Real>;
  using Blocks = std::vector<Mat>;

  InteriorPoint(const ConicProgram& program, const SolverSettings& settings)
      : settings_(settings), m_(static_cast<int>(program.constraints.size())) {
    b_.resize(m_);
    for (int k = 0; k < m_; ++k) b_[k] = program.constraints[k].rhs;
    blocks_.resize(program.blocks.size());
    std::vector<std::vector<Eigen::Triplet<Real>>> triplets(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      auto& blk = blocks_[bi];
      blk.cone = program.blocks[bi];
      blk.C = dense_block(program.objective, static_cast<int>(bi), blk.cone).template cast<Real>();
      blk.c_fro = blk.C.norm();
      blk.a_fro = Vec::Zero(m_);
      if (blk.cone.kind == ConeKind::psd) {
        blk.entries.resize(m_);
        blk.dense.assign(m_, 0);
      }
    }
    for (int k = 0; k < m_; ++k) {
      std::vector<char> touches(blocks_.size(), 0);
      for (const auto& e : program.constraints[k].coeffs.entries()) {
        auto& blk = blocks_[e.block];
        const Real v = e.value;
        touches[e.block] = 1;
        blk.a_fro[k] += (blk.cone.kind == ConeKind::psd && e.row != e.col ? 2 : 1) * v * v;
        if (blk.cone.kind == ConeKind::nonneg) {
          triplets[e.block].emplace_back(k, e.row, v);
        } else {
          blk.entries[k].push_back({e.row, e.col, v});
          if (e.row != e.col) blk.entries[k].push_back({e.col, e.row, v});
        }
      }
      for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        auto& blk = blocks_[bi];
        blk.a_fro[k] = std::sqrt(blk.a_fro[k]);
        if (!touches[bi]) continue;
        blk.touching.push_back(k);
        if (blk.cone.kind == ConeKind::psd) {
          blk.dense[k] = static_cast<int>(blk.entries[k].size()) > blk.cone.dim;
        }
      }
    }
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      auto& blk = blocks_[bi];
      if (blk.cone.kind != ConeKind::nonneg) continue;
      blk.A.resize(m_, blk.cone.dim);
      blk.A.setFromTriplets(triplets[bi].begin(), triplets[bi].end());
      blk.A.makeCompressed();
    }
    degree_ = program.degree();
    for (const auto& blk : blocks_) c_max_ = std::max(c_max_, blk.C.cwiseAbs().maxCoeff());
  }

  SdpSolution run() {
    initial_point();
    SdpSolution sol;
    sol.status = SolveStatus::max_iter;
    Real last_primal_step = 0;
    Real last_dual_step = 0;
    int stalled = 0;

    int iter = 0;
    for (;; ++iter) {
      const Measured res = measure();
      const Real pobj = primal_objective();
      const Real dobj = b_.dot(y_);
      const Real mu = inner_blocks(X_, Z_) / degree_;
      sol.log.push_back({iter, double(pobj), double(dobj), double(res.primal), double(res.dual), double(mu),
                         double(last_primal_step), double(last_dual_step)});
      snapshot_best(res, pobj);

      if (res.primal <= settings_.tol && res.dual <= settings_.tol &&
          std::abs(res.gap) <= settings_.tol * (1 + std::abs(pobj))) {
        sol.status = SolveStatus::optimal;
        break;
      }
      if (iter >= settings_.max_iter) break;

      try {
        compute_scaling();
        factor_schur();

        const Vec rp = b_ - apply_A(X_);
        const Blocks aty = apply_At(y_);
        Blocks Rd(blocks_.size());
        Blocks Rc_affine(blocks_.size());
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
          Rd[bi] = blocks_[bi].C - aty[bi] - Z_[bi];
          Rc_affine[bi] = -X_[bi];
        }

        const Direction affine = solve_direction(Rc_affine, Rd, rp);
        const Real ap = std::min<Real>(1, max_step_primal(affine.dX));
        const Real ad = std::min<Real>(1, max_step_dual(affine.dZ));
        Real mu_affine = 0;
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
          mu_affine += (X_[bi] + ap * affine.dX[bi]).cwiseProduct(Z_[bi] + ad * affine.dZ[bi]).sum();
        }
        mu_affine /= degree_;
        const Real ratio = std::max<Real>(mu_affine, 0) / mu;
        const Real sigma = std::clamp<Real>(ratio * ratio * ratio, 0, 1);

        const Blocks Rc = corrector_rhs(affine, sigma * mu);
        const Direction dir = solve_direction(Rc, Rd, rp);
        const Real fp = std::min<Real>(1, settings_.step_fraction * max_step_primal(dir.dX));
        const Real fd = std::min<Real>(1, settings_.step_fraction * max_step_dual(dir.dZ));
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
          X_[bi] += fp * dir.dX[bi];
          Z_[bi] += fd * dir.dZ[bi];
        }
        y_ += fd * dir.dy;
        last_primal_step = fp;
        last_dual_step = fd;
        stalled = (fp < 1e-10 && fd < 1e-10) ? stalled + 1 : 0;
        if (stalled >= 3) throw NumericalTrouble{"step length collapsed"};
      } catch (const NumericalTrouble& trouble) {
        sol.status = SolveStatus::numerical_failure;
        sol.failure_reason = trouble.what;
        break;
      }
    }

    if (sol.status != SolveStatus::optimal && !best_X_.empty()) {
      X_ = best_X_;
      Z_ = best_Z_;
      y_ = best_y_;
    }
    const Measured res = measure();
    for (const auto& x : X_) sol.X.push_back(x.template cast<double>());
    for (const auto& z : Z_) sol.dual_Z.push_back(z.template cast<double>());
    sol.dual_y = y_.template cast<double>();
    sol.primal_obj = static_cast<double>(primal_objective());
    sol.dual_obj = static_cast<double>(b_.dot(y_));
    sol.primal_residual = static_cast<double>(res.primal);
    sol.dual_residual = static_cast<double>(res.dual);
    sol.duality_gap = static_cast<double>(res.gap);
    sol.iterations = iter;
    sol.extended_precision = sizeof(Real) > sizeof(double);
    return sol;
  }

 private:
  struct FullEntry {
    int p;
    int q;
    Real v;
  };

  struct BlockData {
    Cone cone;
    Mat C;
    std::vector<int> touching;                    // constraints with entries here
    std::vector<std::vector<FullEntry>> entries;  // psd: per constraint, both orientations
    std::vector<char> dense;                      // psd: entry count exceeds dim
    Sparse A;                                     // nonneg: m x dim
    Real c_fro = 0;
    Vec a_fro;                                    // ||A_k^b||_F per constraint
  };

  struct Scaling {
    Mat G;      // psd: X = G L G^T, Z = G^-T L G^-1. nonneg: column sqrt(x/z)
    Mat G_inv;  // psd only
    Mat W;      // psd: G G^T. nonneg: column x/z
    Vec lambda;
  };

  struct Direction {
    Blocks dX;
    Vec dy;
    Blocks dZ;
  };

  struct Measured {
    Real primal = 0;
    Real dual = 0;
    Real gap = 0;
  };

  void initial_point() {
    X_.resize(blocks_.size());
    Z_.resize(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& blk = blocks_[bi];
      const Real d = blk.cone.dim;
      Real ratio = 0;
      for (int k = 0; k < m_; ++k) ratio = std::max<Real>(ratio, (1 + std::abs(b_[k])) / (1 + blk.a_fro[k]));
      const Real a_max = m_ > 0 ? blk.a_fro.maxCoeff() : Real(0);
      const Real alpha = std::max<Real>({10, std::sqrt(d), d * ratio});
      const Real beta = std::max<Real>({10, std::sqrt(d), a_max, blk.c_fro});
      if (blk.cone.kind == ConeKind::psd) {
        X_[bi] = alpha * Mat::Identity(blk.cone.dim, blk.cone.dim);
        Z_[bi] = beta * Mat::Identity(blk.cone.dim, blk.cone.dim);
      } else {
        X_[bi] = Mat::Constant(blk.cone.dim, 1, alpha);
        Z_[bi] = Mat::Constant(blk.cone.dim, 1, beta);
      }
    }
    y_ = Vec::Zero(m_);
  }

  Vec apply_A(const Blocks& X) const {
    Vec out = Vec::Zero(m_);
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& blk = blocks_[bi];
      if (blk.cone.kind == ConeKind::nonneg) {
        out += blk.A * X[bi].col(0);
        continue;
      }
      for (int k : blk.touching) {
        Real acc = 0;
        for (const auto& fe : blk.entries[k]) acc += fe.v * X[bi](fe.p, fe.q);
        out[k] += acc;
      }
    }
    return out;
  }

  Blocks apply_At(const Vec& y) const {
    Blocks out(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& blk = blocks_[bi];
      if (blk.cone.kind == ConeKind::nonneg) {
        out[bi] = blk.A.transpose() * y;
        continue;
      }
      out[bi] = Mat::Zero(blk.cone.dim, blk.cone.dim);
      for (int k : blk.touching) {
        for (const auto& fe : blk.entries[k]) out[bi](fe.p, fe.q) += fe.v * y[k];
      }
    }
    return out;
  }

  Real inner_blocks(const Blocks& A, const Blocks& B) const {
    Real acc = 0;
    for (std::size_t bi = 0; bi < A.size(); ++bi) acc += A[bi].cwiseProduct(B[bi]).sum();
    return acc;
  }

  Real primal_objective() const {
    Real acc = 0;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) acc += blocks_[bi].C.cwiseProduct(X_[bi]).sum();
    return acc;
  }

  Measured measure() const {
    Measured out;
    const Vec ax = apply_A(X_);
    for (int k = 0; k < m_; ++k) {
      out.primal = std::max<Real>(out.primal, std::abs(ax[k] - b_[k]) / (1 + std::abs(b_[k])));
    }
    const Blocks aty = apply_At(y_);
    Real d_max = 0;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      d_max = std::max<Real>(d_max, (blocks_[bi].C - aty[bi] - Z_[bi]).cwiseAbs().maxCoeff());
    }
    out.dual = d_max / (1 + c_max_);
    out.gap = primal_objective() - b_.dot(y_);
    return out;
  }

  void compute_scaling() {
    scaling_.resize(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      auto& sc = scaling_[bi];
      if (blocks_[bi].cone.kind == ConeKind::nonneg) {
        const auto& x = X_[bi];
        const auto& z = Z_[bi];
        if ((x.array() <= 0).any() || (z.array() <= 0).any()) throw NumericalTrouble{"nonneg iterate left the cone"};
        sc.W = x.cwiseQuotient(z);
        sc.G = sc.W.cwiseSqrt();
        sc.lambda = x.cwiseProduct(z).cwiseSqrt().col(0);
        continue;
      }
      Eigen::LLT<Mat> lx(X_[bi]);
      Eigen::LLT<Mat> lz(Z_[bi]);
      if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) {
        throw NumericalTrouble{"psd iterate lost definiteness"};
      }
      const Mat Lx = lx.matrixL();
      const Mat Lz = lz.matrixL();
      Eigen::BDCSVD<Mat> svd(Lz.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vec s = svd.singularValues();
      if ((s.array() <= 0).any() || !s.allFinite()) throw NumericalTrouble{"degenerate scaling"};
      sc.lambda = s;
      sc.G = Lx * svd.matrixV() * s.cwiseSqrt().cwiseInverse().asDiagonal();
      sc.G_inv = s.cwiseInverse().asDiagonal() * sc.G.transpose() * Z_[bi];
      sc.W = sc.G * sc.G.transpose();
      sc.W = Real(0.5) * (sc.W + sc.W.transpose()).eval();
    }
  }

  void factor_schur() {
    Mat M = Mat::Zero(m_, m_);
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& blk = blocks_[bi];
      const auto& W = scaling_[bi].W;
      if (blk.cone.kind == ConeKind::nonneg) {
        const Sparse AW = blk.A * W.col(0).asDiagonal();
        M += Mat(AW * blk.A.transpose());
        continue;
      }
      // W A_l W for constraints with many entries; sparse pairs otherwise.
      std::vector<Mat> dense_products(m_);
      for (int l : blk.touching) {
        if (!blk.dense[l]) continue;
        Mat V = Mat::Zero(blk.cone.dim, blk.cone.dim);
        for (const auto& fe : blk.entries[l]) V.noalias() += fe.v * W.col(fe.p) * W.row(fe.q);
        dense_products[l] = std::move(V);
      }
      const auto& touching = blk.touching;
      for (std::size_t a = 0; a < touching.size(); ++a) {
        const int l = touching[a];
        for (std::size_t c = a; c < touching.size(); ++c) {
          const int k = touching[c];
          Real acc = 0;
          if (blk.dense[l]) {
            for (const auto& fe : blk.entries[k]) acc += fe.v * dense_products[l](fe.p, fe.q);
          } else if (blk.dense[k]) {
            for (const auto& fe : blk.entries[l]) acc += fe.v * dense_products[k](fe.p, fe.q);
          } else {
            for (const auto& fk : blk.entries[k])
              for (const auto& fl : blk.entries[l]) acc += fk.v * fl.v * W(fk.q, fl.p) * W(fl.q, fk.p);
          }
          M(k, l) += acc;
          if (k != l) M(l, k) += acc;
        }
      }
    }
    schur_.compute(M);
    if (schur_.info() == Eigen::Success) return;
    const Real scale = 1 + M.diagonal().cwiseAbs().maxCoeff();
    for (Real delta = 1e-14; delta <= 1e-8; delta *= 100) {
      schur_.compute(M + delta * scale * Mat::Identity(m_, m_));
      if (schur_.info() == Eigen::Success) return;
    }
    throw NumericalTrouble{"Schur complement is not positive definite"};
  }

  Direction solve_direction(const Blocks& Rc, const Blocks& Rd, const Vec& rp) const {
    Blocks K(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& W = scaling_[bi].W;
      if (blocks_[bi].cone.kind == ConeKind::nonneg) {
        K[bi] = Rc[bi] - W.cwiseProduct(Rd[bi]);
      } else {
        K[bi] = Rc[bi] - W * Rd[bi] * W;
      }
    }
    Direction dir;
    dir.dy = schur_.solve(rp - apply_A(K));
    dir.dZ.resize(blocks_.size());
    dir.dX.resize(blocks_.size());
    // A few rounds of iterative refinement on A(dX) = rp; the Schur matrix
    // becomes ill-conditioned close to the optimum.
    for (int round = 0;; ++round) {
      if (!dir.dy.allFinite()) throw NumericalTrouble{"non-finite search direction"};
      const Blocks at_dy = apply_At(dir.dy);
      for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        const auto& W = scaling_[bi].W;
        dir.dZ[bi] = Rd[bi] - at_dy[bi];
        if (blocks_[bi].cone.kind == ConeKind::nonneg) {
          dir.dX[bi] = Rc[bi] - W.cwiseProduct(dir.dZ[bi]);
        } else {
          dir.dZ[bi] = Real(0.5) * (dir.dZ[bi] + dir.dZ[bi].transpose()).eval();
          dir.dX[bi] = Rc[bi] - W * dir.dZ[bi] * W;
          dir.dX[bi] = Real(0.5) * (dir.dX[bi] + dir.dX[bi].transpose()).eval();
        }
      }
      if (round == kRefinementRounds) break;
      const Vec defect = rp - apply_A(dir.dX);
      const Real floor = 16 * std::numeric_limits<Real>::epsilon() * (1 + rp.cwiseAbs().maxCoeff());
      if (defect.cwiseAbs().maxCoeff() <= floor) break;
      dir.dy += schur_.solve(defect);
    }
    return dir;
  }

  // Right-hand side of the linearized complementarity for the combined step:
  // in the scaled space, L o (dX~ + dZ~) = target_mu I - L^2 - (dX~a o dZ~a).
  Blocks corrector_rhs(const Direction& affine, Real target_mu) const {
    Blocks Rc(blocks_.size());
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& sc = scaling_[bi];
      const auto& lam = sc.lambda;
      if (blocks_[bi].cone.kind == ConeKind::nonneg) {
        const Vec dx = affine.dX[bi].col(0).cwiseQuotient(sc.G.col(0));
        const Vec dz = affine.dZ[bi].col(0).cwiseProduct(sc.G.col(0));
        const Vec r = (Vec::Constant(lam.size(), target_mu) - lam.cwiseAbs2() - dx.cwiseProduct(dz)).cwiseQuotient(lam);
        Rc[bi] = sc.G.col(0).cwiseProduct(r);
        continue;
      }
      const Mat dx = sc.G_inv * affine.dX[bi] * sc.G_inv.transpose();
      const Mat dz = sc.G.transpose() * affine.dZ[bi] * sc.G;
      const Mat prod = dx * dz;
      const auto d = lam.size();
      Mat rt(d, d);
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) {
          Real rhs = -Real(0.5) * (prod(i, j) + prod(j, i));
          if (i == j) rhs += target_mu - lam[i] * lam[i];
          rt(i, j) = 2 * rhs / (lam[i] + lam[j]);
        }
      }
      Rc[bi] = sc.G * rt * sc.G.transpose();
      Rc[bi] = Real(0.5) * (Rc[bi] + Rc[bi].transpose()).eval();
    }
    return Rc;
  }

  // Largest step keeping diag(lambda) + step * D positive semidefinite.
  static Real scaled_step_limit(const Vec& lambda, const Mat& D) {
    const Vec inv_sqrt = lambda.cwiseSqrt().cwiseInverse();
    const Mat S = inv_sqrt.asDiagonal() * D * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> eig(Real(0.5) * (S + S.transpose()), Eigen::EigenvaluesOnly);
    const Real lo = eig.eigenvalues()[0];
    return lo < 0 ? -1 / lo : std::numeric_limits<Real>::infinity();
  }

  static Real nonneg_step_limit(const Mat& x, const Mat& dx) {
    Real step = std::numeric_limits<Real>::infinity();
    for (Eigen::Index i = 0; i < dx.rows(); ++i) {
      if (dx(i, 0) < 0) step = std::min<Real>(step, -x(i, 0) / dx(i, 0));
    }
    return step;
  }

  Real max_step_primal(const Blocks& dX) const {
    Real step = std::numeric_limits<Real>::infinity();
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& sc = scaling_[bi];
      if (blocks_[bi].cone.kind == ConeKind::nonneg) {
        step = std::min(step, nonneg_step_limit(X_[bi], dX[bi]));
        continue;
      }
      // X + a dX = G (L + a dX~) G^T with dX~ = G^-1 dX G^-T.
      step = std::min(step, scaled_step_limit(sc.lambda, sc.G_inv * dX[bi] * sc.G_inv.transpose()));
    }
    return step;
  }

  Real max_step_dual(const Blocks& dZ) const {
    Real step = std::numeric_limits<Real>::infinity();
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& sc = scaling_[bi];
      if (blocks_[bi].cone.kind == ConeKind::nonneg) {
        step = std::min(step, nonneg_step_limit(Z_[bi], dZ[bi]));
        continue;
      }
      step = std::min(step, scaled_step_limit(sc.lambda, sc.G.transpose() * dZ[bi] * sc.G));
    }
    return step;
  }

  void snapshot_best(const Measured& res, Real pobj) {
    const Real merit = std::max<Real>({res.primal, res.dual, std::abs(res.gap) / (1 + std::abs(pobj))});
    if (merit < best_merit_) {
      best_merit_ = merit;
      best_X_ = X_;
      best_Z_ = Z_;
      best_y_ = y_;
    }
  }

  SolverSettings settings_;
  int m_;
  int degree_ = 0;
  Real c_max_ = 0;
  Vec b_;
  std::vector<BlockData> blocks_;

  Blocks X_, Z_;
  Vec y_;
  std::vector<Scaling> scaling_;
  Eigen::LLT<Mat> schur_;

  Real best_merit_ = std::numeric_limits<Real>::infinity();
  Blocks best_X_, best_Z_;
  Vec best_y_;
};

double merit(const SdpSolution& sol) {
  return std::max({sol.primal_residual, sol.dual_residual, std::abs(sol.duality_gap) / (1.0 + std::abs(sol.primal_obj))});
}

}  // namespace

SdpSolution solve(const ConicProgram& program, const SolverSettings& settings) {
  program.validate();
  if (!(settings.tol > 0.0)) throw Error(ErrorCode::invalid_parameter, "solver tol must be positive");
  if (settings.max_iter < 0) throw Error(ErrorCode::invalid_parameter, "max_iter must be non-negative");
  if (!(settings.step_fraction > 0.0 && settings.step_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_parameter, "step_fraction must lie in (0, 1)");
  }
  if (settings.precision == SolverPrecision::extended) return InteriorPoint<long double>(program, settings).run();
  SdpSolution sol = InteriorPoint<double>(program, settings).run();
  if (settings.precision == SolverPrecision::standard || sol.status == SolveStatus::optimal) return sol;
  // Programs without a strictly feasible primal point stall in double near
  // mu ~ 1e-7; a second run in long double gets past that.
  SdpSolution retry = InteriorPoint<long double>(program, settings).run();
  retry.iterations += sol.iterations;
  if (retry.status == SolveStatus::optimal || merit(retry) <= merit(sol)) return retry;
  sol.iterations = retry.iterations;
  return sol;
}

}  // namespace psksdr
