#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "psksdr/model.hpp"
#include "psksdr/sdp.hpp"

namespace psksdr {

enum class Relaxation { rsdr, ersdr1, ersdr2 };

const char* to_string(Relaxation model) noexcept;
Relaxation relaxation_from_string(const std::string& name);

/// Point (y, Y, t) of the enhanced real SDR with per-symbol lifting constraints.
struct Ersdr1Point {
  Eigen::VectorXd y;  // 2n
  Eigen::MatrixXd Y;  // 2n x 2n
  Eigen::VectorXd t;  // Mn, block i holds t_i
};

/// Point (t, T) of the one-hot lifted SDR; T has M x M blocks T_{i,j}.
struct Ersdr2Point {
  Eigen::VectorXd t;
  Eigen::MatrixXd T;
};

/// Named maximum violations; keys depend on the point type.
struct FeasibilityReport {
  std::map<std::string, double> violations;

  double worst() const;
  bool passes(double tol) const { return worst() <= tol; }
  std::string describe() const;
};

struct BuildOptions {
  // Omits the explicit t >= 0 cone of the one-hot lifted model; the
  // constraint is implied by T_{i,i} = Diag(t_i) together with T >= t t^T.
  bool drop_redundant = false;
};

ConicProgram build_rsdr(const RealifiedData& data);
ConicProgram build_ersdr1(const RealifiedData& data);
ConicProgram build_ersdr2(const RealifiedData& data, const BuildOptions& options = {});
ConicProgram build_relaxation(Relaxation model, const RealifiedData& data, const BuildOptions& options = {});

// Row/column of y_a (a in 0..2n-1) inside the homogenized block.
inline int lifted_index(int a) { return 1 + a; }
// Position of t_{i,j} in the Mn-vector.
inline int t_index(int i, int j, int M) { return i * M + j; }

// Pinned homogenizing entry must equal 1 within this tolerance on extraction.
inline constexpr double kCornerTolerance = 1e-6;

// Homogenized block [[1, y^T], [y, Y]] of the rsdr / ersdr1 solutions.
Ersdr1Point extract_ersdr1(const SdpSolution& solution, int n, int M);
Ersdr2Point extract_ersdr2(const SdpSolution& solution, int n, int M);
// (y, Y) from an rsdr solution; t is left empty.
Ersdr1Point extract_rsdr(const SdpSolution& solution, int n);

FeasibilityReport check_ersdr1(const Ersdr1Point& point, const RealifiedData& data);
FeasibilityReport check_ersdr2(const Ersdr2Point& point, const RealifiedData& data);

double objective_ersdr1(const Ersdr1Point& point, const RealifiedData& data);
double objective_ersdr2(const Ersdr2Point& point, const RealifiedData& data);

// Y_i of the lifting constraint: [[1, y_i, y_{n+i}], [y_i, Y_ii, Y_i,n+i], ...].
Eigen::Matrix3d local_block(const Ersdr1Point& point, int i);

// One-hot t for 0-based symbol indices.
Eigen::VectorXd one_hot(const std::vector<int>& index, int M);
// Integral points: y = Shat t, Y = y y^T and T = t t^T.
Ersdr1Point integral_ersdr1(const std::vector<int>& index, const RealifiedData& data);
Ersdr2Point integral_ersdr2(const std::vector<int>& index, const RealifiedData& data);

// Homogenized PSD block [[1, v^T], [v, V]].
Eigen::MatrixXd homogenize(const Eigen::VectorXd& v, const Eigen::MatrixXd& V);

}  // namespace psksdr
