#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "psksdr/model.hpp"
#include "psksdr/relaxations.hpp"

namespace psksdr {

struct EquivalenceTolerances {
  double feasibility = 1e-7;     // point invariants on input and output
  double identity = 1e-8;        // Gram identities and Z_i eta = xi
  double eigen_residual = 1e-9;  // ||(Y - yy^T) - U L U^T|| relative to 1 + lambda_max
  double rank_relative = 1e-10;  // eigenvalues below this times max(lambda_max, 1) are zero
  double indefinite = 1e-8;      // Y - yy^T may dip this far below zero
  double pinv_relative = 1e-12;  // pseudo-inverse cutoff for the 2x2 Gram matrices
};

/// Intermediate quantities of the construction of T from (y, Y, t).
/// Index i runs over the n antennas; "re"/"im" are the i and n+i members.
struct ConstructionTrace {
  Eigen::MatrixXd U;       // 2n x r
  Eigen::VectorXd Lambda;  // r positive eigenvalues of Y - yy^T
  int rank_r = 0;
  std::vector<Eigen::MatrixXd> U_i;       // M x M
  std::vector<Eigen::VectorXd> Lambda_i;  // eigenvalues of Diag(t_i) - t_i t_i^T
  std::vector<Eigen::VectorXd> eta_re, eta_im;
  std::vector<Eigen::VectorXd> xi_re, xi_im;
  std::vector<Eigen::MatrixXd> Z;  // r x M
  std::vector<Eigen::MatrixXd> X;  // 2n x M
};

/// Worst deviations of a trace from the identities it must satisfy.
struct TraceCheck {
  double eigen_residual = 0.0;     // relative to 1 + lambda_max
  double gram_mismatch = 0.0;      // Gram([eta_i, eta_n+i]) vs Gram([xi_i, xi_n+i])
  double contraction_excess = 0.0; // max(0, lambda_max(Z_i^T Z_i) - 1)
  double map_residual = 0.0;       // ||Z_i eta - xi||
  // max lambda_max(B_i (Z_i^T Z_i - I) B_i^T) with B_i = U_i Lambda_i^1/2: the
  // part of the contraction excess that reaches the diagonal of T - tt^T.
  // Informational; on inexact input the raw excess can be large along
  // directions B_i annihilates.
  double weighted_excess = 0.0;
  bool passes(const EquivalenceTolerances& tol) const;
  std::string describe() const;
};

struct EquivalenceReport {
  double obj_1 = 0.0;
  double obj_2 = 0.0;
  double obj_abs_diff = 0.0;
  double obj_rel_diff = 0.0;            // |obj_1 - obj_2| / (1 + |obj_1|)
  double connection_Y_residual = 0.0;   // ||Shat T Shat^T - Y||_2
  double connection_y_residual = 0.0;   // ||Shat t - y||_2
  FeasibilityReport feasibility;        // keys prefixed "ersdr1." / "ersdr2."
  double tolerance = 0.0;
  std::vector<std::string> failed;      // names of quantities above tolerance
  bool pass = false;
};

// y = Shat t, Y = Shat T Shat^T, t unchanged.
Ersdr1Point lift_to_ersdr1(const Ersdr2Point& point, const RealifiedData& data,
                           const EquivalenceTolerances& tol = {});

struct Construction {
  Ersdr2Point point;
  ConstructionTrace trace;
};

Construction construct_T(const Ersdr1Point& point, const RealifiedData& data,
                         const EquivalenceTolerances& tol = {});

// Fills U_i, Lambda_i, eta and xi of a trace whose U, Lambda are set.
void build_eta_xi(const Ersdr1Point& point, const RealifiedData& data, ConstructionTrace& trace,
                  const EquivalenceTolerances& tol = {});

// Z = Xi G^+ H^T with H = [eta_re, eta_im], Xi = [xi_re, xi_im], G = H^T H.
Eigen::MatrixXd solve_contraction(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Xi,
                                  const EquivalenceTolerances& tol = {});

TraceCheck check_trace(const ConstructionTrace& trace, const Ersdr1Point& point);

EquivalenceReport verify_equivalence(const Ersdr1Point& point1, const Ersdr2Point& point2,
                                     const RealifiedData& data, double tol);

}  // namespace psksdr
