#include "psksdr/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psksdr/error.hpp"
#include "psksdr/sdp.hpp"

namespace psksdr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(m).singularValues()[0];
}

std::string format_violations(const FeasibilityReport& report, double tol) {
  std::ostringstream os;
  os << "violations above " << tol << ":";
  for (const auto& [name, value] : report.violations) {
    if (value > tol) os << ' ' << name << '=' << value;
  }
  return os.str();
}

MatrixXd gram2(const VectorXd& a, const VectorXd& b) {
  MatrixXd g(2, 2);
  g << a.dot(a), a.dot(b), b.dot(a), b.dot(b);
  return g;
}

}  // namespace

bool TraceCheck::passes(const EquivalenceTolerances& tol) const {
  return eigen_residual <= tol.eigen_residual && gram_mismatch <= tol.identity &&
         contraction_excess <= tol.identity && map_residual <= tol.identity;
}

std::string TraceCheck::describe() const {
  std::ostringstream os;
  os << "eigen_residual=" << eigen_residual << " gram_mismatch=" << gram_mismatch
     << " contraction_excess=" << contraction_excess << " weighted_excess=" << weighted_excess << " map_residual=" << map_residual;
  return os.str();
}

Ersdr1Point lift_to_ersdr1(const Ersdr2Point& point, const RealifiedData& data, const EquivalenceTolerances& tol) {
  const auto report = check_ersdr2(point, data);
  if (!report.passes(tol.feasibility)) {
    throw Error(ErrorCode::infeasible_input, "lift_to_ersdr1: input " + format_violations(report, tol.feasibility));
  }
  Ersdr1Point out;
  out.t = point.t;
  out.y = data.Shat * point.t;
  out.Y = data.Shat * point.T * data.Shat.transpose();
  out.Y = 0.5 * (out.Y + out.Y.transpose()).eval();
  return out;
}

void build_eta_xi(const Ersdr1Point& point, const RealifiedData& data, ConstructionTrace& trace,
                  const EquivalenceTolerances& tol) {
  const int n = data.n;
  const int M = data.M;
  const auto& s = data.constellation;
  trace.U_i.assign(n, MatrixXd());
  trace.Lambda_i.assign(n, VectorXd());
  trace.eta_re.assign(n, VectorXd());
  trace.eta_im.assign(n, VectorXd());
  trace.xi_re.assign(n, VectorXd());
  trace.xi_im.assign(n, VectorXd());

  // Xi = Lambda^1/2 U^T, so Xi^T Xi is the truncated Y - yy^T.
  const MatrixXd Xi = trace.Lambda.cwiseSqrt().asDiagonal() * trace.U.transpose();
  const MatrixXd D = point.Y - point.y * point.y.transpose();

  for (int i = 0; i < n; ++i) {
    const VectorXd ti = point.t.segment(i * M, M);
    const MatrixXd Di = MatrixXd(ti.asDiagonal()) - ti * ti.transpose();
    const auto eig = sym_eig(Di);
    trace.U_i[i] = eig.vectors;
    trace.Lambda_i[i] = eig.values.cwiseMax(0.0);
    const MatrixXd B = trace.Lambda_i[i].cwiseSqrt().asDiagonal() * eig.vectors.transpose();
    trace.eta_re[i] = B * s.s_re;
    trace.eta_im[i] = B * s.s_im;
    trace.xi_re[i] = Xi.col(i);
    trace.xi_im[i] = Xi.col(n + i);

    const double scale = 1.0 + std::max(D(i, i), D(n + i, n + i));
    const MatrixXd g_eta = gram2(trace.eta_re[i], trace.eta_im[i]);
    const MatrixXd g_xi = gram2(trace.xi_re[i], trace.xi_im[i]);
    const double norm_re = std::abs(g_eta(0, 0) - D(i, i));
    const double norm_im = std::abs(g_eta(1, 1) - D(n + i, n + i));
    const double cross = std::abs(g_eta(0, 1) - D(i, n + i));
    const double match = (g_eta - g_xi).cwiseAbs().maxCoeff();
    // These identities restate the lifting constraints, so an input accepted
    // at the feasibility tier may miss them by a small multiple of it.
    const double limit = std::max(tol.identity, 4.0 * tol.feasibility) * scale;
    auto fail = [&](const std::string& what, double value) {
      std::ostringstream os;
      os << "build_eta_xi: antenna " << i << ": " << what << " off by " << value;
      throw Error(ErrorCode::construction, os.str());
    };
    if (norm_re > limit) fail("||eta_i||^2 = Y_ii - y_i^2", norm_re);
    if (norm_im > limit) fail("||eta_n+i||^2 = Y_n+i,n+i - y_n+i^2", norm_im);
    if (cross > limit) fail("eta_i^T eta_n+i = Y_i,n+i - y_i y_n+i", cross);
    if (match > limit) fail("Gram(eta) = Gram(xi)", match);
  }
}

MatrixXd solve_contraction(const MatrixXd& H, const MatrixXd& Xi, const EquivalenceTolerances& tol) {
  if (H.cols() != Xi.cols()) throw Error(ErrorCode::dimension_mismatch, "solve_contraction: pair sizes differ");
  const MatrixXd G = H.transpose() * H;
  const MatrixXd G_xi = Xi.transpose() * Xi;
  const double mismatch = (G - G_xi).cwiseAbs().maxCoeff();
  if (mismatch > tol.identity * (1.0 + G.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "solve_contraction: Gram matrices differ by " << mismatch;
    throw Error(ErrorCode::construction, os.str());
  }
  const auto eig = sym_eig(G);
  const double cutoff = tol.pinv_relative * std::max(eig.values.size() ? eig.values[0] : 0.0, 1.0);
  VectorXd inv = VectorXd::Zero(eig.values.size());
  for (Eigen::Index k = 0; k < inv.size(); ++k) {
    if (eig.values[k] > cutoff) inv[k] = 1.0 / eig.values[k];
  }
  const MatrixXd G_pinv = eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
  return Xi * G_pinv * H.transpose();
}

Construction construct_T(const Ersdr1Point& point, const RealifiedData& data, const EquivalenceTolerances& tol) {
  const auto report = check_ersdr1(point, data);
  if (!report.passes(tol.feasibility)) {
    throw Error(ErrorCode::infeasible_input, "construct_T: input " + format_violations(report, tol.feasibility));
  }
  const int n = data.n;
  const int M = data.M;
  Construction out;
  auto& trace = out.trace;

  const MatrixXd D = point.Y - point.y * point.y.transpose();
  const auto eig = sym_eig(D);
  const double lambda_max = eig.values[0];
  const double lambda_min = eig.values[eig.values.size() - 1];
  if (lambda_min < -tol.indefinite) {
    std::ostringstream os;
    os << "construct_T: Y - yy^T has eigenvalue " << lambda_min;
    throw Error(ErrorCode::infeasible_input, os.str());
  }
  const double cutoff = tol.rank_relative * std::max(lambda_max, 1.0);
  int r = 0;
  while (r < eig.values.size() && eig.values[r] > cutoff) ++r;
  trace.rank_r = r;
  trace.U = eig.vectors.leftCols(r);
  trace.Lambda = eig.values.head(r);

  build_eta_xi(point, data, trace, tol);
  EquivalenceTolerances gram_tol = tol;
  gram_tol.identity = std::max(tol.identity, 4.0 * tol.feasibility);

  // With B_i = U_i Lambda_i^1/2 the off-diagonal blocks are
  // t_i t_j^T + X_i^T (Y - yy^T) X_j = t_i t_j^T + B_i Z_i^T Z_j B_j^T.
  std::vector<MatrixXd> ZB(n);
  trace.Z.assign(n, MatrixXd());
  trace.X.assign(n, MatrixXd());
  const VectorXd lam_inv_sqrt = trace.Lambda.cwiseSqrt().cwiseInverse();
  for (int i = 0; i < n; ++i) {
    MatrixXd H(M, 2);
    H << trace.eta_re[i], trace.eta_im[i];
    MatrixXd Xi(r, 2);
    Xi << trace.xi_re[i], trace.xi_im[i];
    trace.Z[i] = r > 0 ? solve_contraction(H, Xi, gram_tol) : MatrixXd::Zero(0, M);
    const MatrixXd B = trace.U_i[i] * trace.Lambda_i[i].cwiseSqrt().asDiagonal();
    ZB[i] = trace.Z[i] * B.transpose();
    trace.X[i] = trace.U * lam_inv_sqrt.asDiagonal() * ZB[i];
  }

  Ersdr2Point& p = out.point;
  p.t = point.t;
  p.T = p.t * p.t.transpose();
  for (int i = 0; i < n; ++i) {
    p.T.block(i * M, i * M, M, M) = p.t.segment(i * M, M).asDiagonal();
    for (int j = i + 1; j < n; ++j) {
      const MatrixXd corr = ZB[i].transpose() * ZB[j];
      p.T.block(i * M, j * M, M, M) += corr;
      p.T.block(j * M, i * M, M, M) += corr.transpose();
    }
  }
  return out;
}

TraceCheck check_trace(const ConstructionTrace& trace, const Ersdr1Point& point) {
  TraceCheck out;
  const MatrixXd D = point.Y - point.y * point.y.transpose();
  const MatrixXd approx = trace.U * trace.Lambda.asDiagonal() * trace.U.transpose();
  const double lambda_max = trace.Lambda.size() ? trace.Lambda.maxCoeff() : 0.0;
  out.eigen_residual = spectral_norm(D - approx) / (1.0 + lambda_max);
  for (std::size_t i = 0; i < trace.Z.size(); ++i) {
    const MatrixXd g_eta = gram2(trace.eta_re[i], trace.eta_im[i]);
    const MatrixXd g_xi = gram2(trace.xi_re[i], trace.xi_im[i]);
    out.gram_mismatch = std::max(out.gram_mismatch, (g_eta - g_xi).cwiseAbs().maxCoeff());
    const auto& Z = trace.Z[i];
    if (Z.rows() == 0) {
      out.map_residual = std::max({out.map_residual, trace.xi_re[i].norm(), trace.xi_im[i].norm()});
      continue;
    }
    const double top = spectral_norm_sym(Z.transpose() * Z);
    out.contraction_excess = std::max(out.contraction_excess, top - 1.0);
    if (i < trace.U_i.size()) {
      const MatrixXd B = trace.U_i[i] * trace.Lambda_i[i].cwiseSqrt().asDiagonal();
      const MatrixXd ZB = Z * B.transpose();
      const MatrixXd excess = ZB.transpose() * ZB - B * B.transpose();
      out.weighted_excess = std::max(out.weighted_excess, sym_eig(excess).values[0]);
    }
    out.map_residual = std::max({out.map_residual, (Z * trace.eta_re[i] - trace.xi_re[i]).norm(),
                                 (Z * trace.eta_im[i] - trace.xi_im[i]).norm()});
  }
  return out;
}

EquivalenceReport verify_equivalence(const Ersdr1Point& point1, const Ersdr2Point& point2,
                                     const RealifiedData& data, double tol) {
  EquivalenceReport out;
  out.tolerance = tol;
  out.obj_1 = objective_ersdr1(point1, data);
  out.obj_2 = objective_ersdr2(point2, data);
  out.obj_abs_diff = std::abs(out.obj_1 - out.obj_2);
  out.obj_rel_diff = out.obj_abs_diff / (1.0 + std::abs(out.obj_1));
  out.connection_Y_residual = spectral_norm(data.Shat * point2.T * data.Shat.transpose() - point1.Y);
  out.connection_y_residual = (data.Shat * point2.t - point1.y).norm();
  for (const auto& [name, value] : check_ersdr1(point1, data).violations) out.feasibility.violations["ersdr1." + name] = value;
  for (const auto& [name, value] : check_ersdr2(point2, data).violations) out.feasibility.violations["ersdr2." + name] = value;

  auto note = [&](const std::string& name, double value) {
    if (!(value <= tol)) out.failed.push_back(name);
  };
  note("objective", out.obj_rel_diff);
  note("connection_Y", out.connection_Y_residual);
  note("connection_y", out.connection_y_residual);
  for (const auto& [name, value] : out.feasibility.violations) note(name, value);
  out.pass = out.failed.empty();
  return out;
}

}  // namespace psksdr
