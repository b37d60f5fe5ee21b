#include "psksdr/relaxations.hpp"

#include <algorithm>
#include <sstream>

#include "psksdr/error.hpp"

namespace psksdr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(Relaxation model) noexcept {
  switch (model) {
    case Relaxation::rsdr: return "rsdr";
    case Relaxation::ersdr1: return "ersdr1";
    case Relaxation::ersdr2: return "ersdr2";
  }
  return "unknown";
}

Relaxation relaxation_from_string(const std::string& name) {
  if (name == "rsdr") return Relaxation::rsdr;
  if (name == "ersdr1") return Relaxation::ersdr1;
  if (name == "ersdr2") return Relaxation::ersdr2;
  throw Error(ErrorCode::invalid_parameter, "unknown model '" + name + "' (expected rsdr|ersdr1|ersdr2)");
}

double FeasibilityReport::worst() const {
  double w = 0.0;
  for (const auto& [name, value] : violations) w = std::max(w, value);
  return w;
}

std::string FeasibilityReport::describe() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, value] : violations) {
    out << (first ? "" : ", ") << name << '=' << value;
    first = false;
  }
  return out.str();
}

namespace {

constexpr int kLiftedBlock = 0;
constexpr int kWeightBlock = 1;

std::string indexed(const char* stem, int i) { return std::string(stem) + "[" + std::to_string(i) + "]"; }

LinearConstraint corner_constraint() {
  LinearConstraint con;
  con.coeffs.add(kLiftedBlock, 0, 0, 1.0);
  con.rhs = 1.0;
  con.label = "corner";
  return con;
}

// Objective [[0, lin^T], [lin, quad]] on the homogenized block.
SymBlockMatrix lifted_objective(const MatrixXd& quad, const VectorXd& lin) {
  SymBlockMatrix obj;
  const auto d = static_cast<int>(lin.size());
  for (int a = 0; a < d; ++a) {
    if (lin[a] != 0.0) obj.add(kLiftedBlock, 0, lifted_index(a), lin[a]);
    for (int b = a; b < d; ++b) {
      if (quad(a, b) != 0.0) obj.add(kLiftedBlock, lifted_index(a), lifted_index(b), quad(a, b));
    }
  }
  return obj;
}

// Coefficient 1 on X[p, q] (an off-diagonal entry is split over both halves).
void add_unit(SymBlockMatrix& coeffs, int block, int p, int q, double scale = 1.0) {
  coeffs.add(block, p, q, p == q ? scale : 0.5 * scale);
}

void require_data(const RealifiedData& data) {
  if (data.n < 1 || data.M < 2 || data.Qhat.rows() != 2 * data.n || data.Shat.cols() != data.n * data.M) {
    throw Error(ErrorCode::invalid_parameter, "realified data is incomplete");
  }
}

}  // namespace

ConicProgram build_rsdr(const RealifiedData& data) {
  require_data(data);
  const int n = data.n;
  ConicProgram prog;
  prog.name = "rsdr";
  prog.blocks = {psd_cone(2 * n + 1)};
  prog.objective = lifted_objective(data.Qhat, data.chat);
  prog.constraints.push_back(corner_constraint());
  for (int i = 0; i < n; ++i) {
    LinearConstraint con;
    add_unit(con.coeffs, kLiftedBlock, lifted_index(i), lifted_index(i));
    add_unit(con.coeffs, kLiftedBlock, lifted_index(n + i), lifted_index(n + i));
    con.rhs = 1.0;
    con.label = indexed("modulus", i);
    prog.constraints.push_back(std::move(con));
  }
  return prog;
}

ConicProgram build_ersdr1(const RealifiedData& data) {
  require_data(data);
  const int n = data.n;
  const int M = data.M;
  const auto& sr = data.constellation.s_re;
  const auto& si = data.constellation.s_im;

  ConicProgram prog;
  prog.name = "ersdr1";
  prog.blocks = {psd_cone(2 * n + 1), nonneg_cone(n * M)};
  prog.objective = lifted_objective(data.Qhat, data.chat);
  prog.constraints.push_back(corner_constraint());

  // Y_i = sum_j t_{i,j} P_j, written out entry by entry:
  //   y_i = s_R^T t_i, y_{n+i} = s_I^T t_i, Y_ii = s_R^T D s_R,
  //   Y_{n+i,n+i} = s_I^T D s_I, Y_{i,n+i} = s_R^T D s_I, D = Diag(t_i).
  struct Row {
    const char* stem;
    int p;
    int q;
    VectorXd weights;
  };
  for (int i = 0; i < n; ++i) {
    const int re = lifted_index(i);
    const int im = lifted_index(n + i);
    const Row rows[] = {
        {"lift.re", 0, re, sr},
        {"lift.im", 0, im, si},
        {"lift.rr", re, re, sr.cwiseProduct(sr)},
        {"lift.ii", im, im, si.cwiseProduct(si)},
        {"lift.ri", re, im, sr.cwiseProduct(si)},
    };
    for (const auto& row : rows) {
      LinearConstraint con;
      add_unit(con.coeffs, kLiftedBlock, row.p, row.q);
      for (int j = 0; j < M; ++j) {
        if (row.weights[j] != 0.0) {
          const int k = t_index(i, j, M);
          con.coeffs.add(kWeightBlock, k, k, -row.weights[j]);
        }
      }
      con.rhs = 0.0;
      con.label = indexed(row.stem, i);
      prog.constraints.push_back(std::move(con));
    }
  }
  for (int i = 0; i < n; ++i) {
    LinearConstraint con;
    for (int j = 0; j < M; ++j) {
      const int k = t_index(i, j, M);
      con.coeffs.add(kWeightBlock, k, k, 1.0);
    }
    con.rhs = 1.0;
    con.label = indexed("assign", i);
    prog.constraints.push_back(std::move(con));
  }
  return prog;
}

ConicProgram build_ersdr2(const RealifiedData& data, const BuildOptions& options) {
  require_data(data);
  const int n = data.n;
  const int M = data.M;
  const int dim = n * M;

  ConicProgram prog;
  prog.name = "ersdr2";
  prog.blocks = {psd_cone(dim + 1)};
  if (!options.drop_redundant) prog.blocks.push_back(nonneg_cone(dim));
  prog.objective = lifted_objective(data.Qbar, data.cbar);
  prog.constraints.push_back(corner_constraint());

  // A t = e_n on the first row of the homogenized block.
  for (int i = 0; i < n; ++i) {
    LinearConstraint con;
    for (int j = 0; j < M; ++j) add_unit(con.coeffs, kLiftedBlock, 0, lifted_index(t_index(i, j, M)));
    con.rhs = 1.0;
    con.label = indexed("assign", i);
    prog.constraints.push_back(std::move(con));
  }
  // T_{i,i} = Diag(t_i): M diagonal links and M(M-1)/2 zeros per i.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < M; ++j) {
      const int p = lifted_index(t_index(i, j, M));
      LinearConstraint con;
      add_unit(con.coeffs, kLiftedBlock, p, p);
      add_unit(con.coeffs, kLiftedBlock, 0, p, -1.0);
      con.rhs = 0.0;
      con.label = "diag[" + std::to_string(i) + "," + std::to_string(j) + "]";
      prog.constraints.push_back(std::move(con));
    }
    for (int j = 0; j < M; ++j) {
      for (int l = j + 1; l < M; ++l) {
        LinearConstraint con;
        add_unit(con.coeffs, kLiftedBlock, lifted_index(t_index(i, j, M)), lifted_index(t_index(i, l, M)));
        con.rhs = 0.0;
        con.label = "offdiag[" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(l) + "]";
        prog.constraints.push_back(std::move(con));
      }
    }
  }
  if (!options.drop_redundant) {
    // Standard form keeps the nonneg copy of t as its own block, tied to
    // the first row of the homogenized block.
    for (int k = 0; k < dim; ++k) {
      LinearConstraint con;
      add_unit(con.coeffs, kLiftedBlock, 0, lifted_index(k));
      con.coeffs.add(kWeightBlock, k, k, -1.0);
      con.rhs = 0.0;
      con.label = indexed("link", k);
      prog.constraints.push_back(std::move(con));
    }
  }
  return prog;
}

ConicProgram build_relaxation(Relaxation model, const RealifiedData& data, const BuildOptions& options) {
  switch (model) {
    case Relaxation::rsdr: return build_rsdr(data);
    case Relaxation::ersdr1: return build_ersdr1(data);
    case Relaxation::ersdr2: return build_ersdr2(data, options);
  }
  throw Error(ErrorCode::invalid_parameter, "unknown relaxation");
}

namespace {

const MatrixXd& lifted_block(const SdpSolution& solution, int expected_dim) {
  if (solution.X.empty() || solution.X[0].rows() != expected_dim || solution.X[0].cols() != expected_dim) {
    throw Error(ErrorCode::dimension_mismatch, "solution block does not match (n, M)");
  }
  const auto& X = solution.X[0];
  if (std::abs(X(0, 0) - 1.0) > kCornerTolerance) {
    throw Error(ErrorCode::infeasible_input,
                "homogenizing entry is " + std::to_string(X(0, 0)) + ", expected 1");
  }
  return X;
}

MatrixXd symmetric(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Ersdr1Point extract_rsdr(const SdpSolution& solution, int n) {
  const auto& X = lifted_block(solution, 2 * n + 1);
  Ersdr1Point p;
  p.y = X.col(0).segment(1, 2 * n);
  p.Y = symmetric(X.block(1, 1, 2 * n, 2 * n));
  return p;
}

Ersdr1Point extract_ersdr1(const SdpSolution& solution, int n, int M) {
  auto p = extract_rsdr(solution, n);
  if (solution.X.size() != 2 || solution.X[1].rows() != n * M || solution.X[1].cols() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "ersdr1 solution lacks the weight block");
  }
  p.t = solution.X[1].col(0);
  return p;
}

Ersdr2Point extract_ersdr2(const SdpSolution& solution, int n, int M) {
  const int dim = n * M;
  const auto& X = lifted_block(solution, dim + 1);
  Ersdr2Point p;
  p.t = X.col(0).segment(1, dim);
  p.T = symmetric(X.block(1, 1, dim, dim));
  return p;
}

Eigen::Matrix3d local_block(const Ersdr1Point& point, int i) {
  const auto n = static_cast<int>(point.y.size() / 2);
  Eigen::Matrix3d B;
  B(0, 0) = 1.0;
  B(0, 1) = B(1, 0) = point.y[i];
  B(0, 2) = B(2, 0) = point.y[n + i];
  B(1, 1) = point.Y(i, i);
  B(2, 2) = point.Y(n + i, n + i);
  B(1, 2) = point.Y(i, n + i);
  B(2, 1) = point.Y(n + i, i);
  return B;
}

namespace {

void check_weights(const VectorXd& t, const RealifiedData& data, FeasibilityReport& report) {
  report.violations["assignment"] = (data.A * t - VectorXd::Ones(data.n)).cwiseAbs().maxCoeff();
  report.violations["nonneg"] = std::max(0.0, -t.minCoeff());
}

}  // namespace

FeasibilityReport check_ersdr1(const Ersdr1Point& point, const RealifiedData& data) {
  const int n = data.n;
  const int M = data.M;
  if (point.y.size() != 2 * n || point.Y.rows() != 2 * n || point.Y.cols() != 2 * n || point.t.size() != n * M) {
    throw Error(ErrorCode::dimension_mismatch, "ersdr1 point does not match (n, M)");
  }
  FeasibilityReport report;
  report.violations["psd"] = std::max(0.0, -min_eigenvalue(point.Y - point.y * point.y.transpose()));
  check_weights(point.t, data, report);
  double lifting = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix3d target = Eigen::Matrix3d::Zero();
    for (int j = 0; j < M; ++j) target += point.t[t_index(i, j, M)] * data.P[j];
    lifting = std::max(lifting, (local_block(point, i) - target).cwiseAbs().maxCoeff());
  }
  report.violations["lifting"] = lifting;
  report.violations["symmetry"] = (point.Y - point.Y.transpose()).cwiseAbs().maxCoeff();
  return report;
}

FeasibilityReport check_ersdr2(const Ersdr2Point& point, const RealifiedData& data) {
  const int n = data.n;
  const int M = data.M;
  if (point.t.size() != n * M || point.T.rows() != n * M || point.T.cols() != n * M) {
    throw Error(ErrorCode::dimension_mismatch, "ersdr2 point does not match (n, M)");
  }
  FeasibilityReport report;
  report.violations["psd"] = std::max(0.0, -min_eigenvalue(point.T - point.t * point.t.transpose()));
  check_weights(point.t, data, report);
  double diag = 0.0;
  for (int i = 0; i < n; ++i) {
    const MatrixXd target = point.t.segment(i * M, M).asDiagonal();
    diag = std::max(diag, (point.T.block(i * M, i * M, M, M) - target).cwiseAbs().maxCoeff());
  }
  report.violations["diagonal_blocks"] = diag;
  report.violations["symmetry"] = (point.T - point.T.transpose()).cwiseAbs().maxCoeff();
  return report;
}

double objective_ersdr1(const Ersdr1Point& point, const RealifiedData& data) {
  return data.Qhat.cwiseProduct(point.Y).sum() + 2.0 * data.chat.dot(point.y);
}

double objective_ersdr2(const Ersdr2Point& point, const RealifiedData& data) {
  return data.Qbar.cwiseProduct(point.T).sum() + 2.0 * data.cbar.dot(point.t);
}

VectorXd one_hot(const std::vector<int>& index, int M) {
  VectorXd t = VectorXd::Zero(static_cast<Eigen::Index>(index.size()) * M);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= M) throw Error(ErrorCode::invalid_parameter, "symbol index out of range");
    t[t_index(static_cast<int>(i), index[i], M)] = 1.0;
  }
  return t;
}

Ersdr1Point integral_ersdr1(const std::vector<int>& index, const RealifiedData& data) {
  if (static_cast<int>(index.size()) != data.n) throw Error(ErrorCode::dimension_mismatch, "index length != n");
  Ersdr1Point p;
  p.t = one_hot(index, data.M);
  p.y = data.Shat * p.t;
  p.Y = p.y * p.y.transpose();
  return p;
}

Ersdr2Point integral_ersdr2(const std::vector<int>& index, const RealifiedData& data) {
  if (static_cast<int>(index.size()) != data.n) throw Error(ErrorCode::dimension_mismatch, "index length != n");
  Ersdr2Point p;
  p.t = one_hot(index, data.M);
  p.T = p.t * p.t.transpose();
  return p;
}

MatrixXd homogenize(const VectorXd& v, const MatrixXd& V) {
  const auto d = v.size();
  MatrixXd out(d + 1, d + 1);
  out(0, 0) = 1.0;
  out.block(0, 1, 1, d) = v.transpose();
  out.block(1, 0, d, 1) = v;
  out.block(1, 1, d, d) = V;
  return out;
}

}  // namespace psksdr
