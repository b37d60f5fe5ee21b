#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace psksdr {

enum class ConeKind { psd, nonneg };

struct Cone {
  ConeKind kind = ConeKind::psd;
  int dim = 0;
};

inline Cone psd_cone(int dim) { return {ConeKind::psd, dim}; }
inline Cone nonneg_cone(int dim) { return {ConeKind::nonneg, dim}; }

/// One coefficient of a block-structured symmetric matrix. An off-diagonal
/// entry (row != col) stands for both mirrored positions, so it contributes
/// 2 * value * X[row, col] to an inner product. For a nonneg block the entry
/// must sit on the diagonal (row == col == coordinate index).
struct Entry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Sparse symmetric coefficient data over all blocks. Entries are stored
/// upper-triangular (row <= col); adding to an existing position sums.
class SymBlockMatrix {
 public:
  void add(int block, int row, int col, double value);
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
};

struct LinearConstraint {
  SymBlockMatrix coeffs;
  double rhs = 0.0;
  std::string label;
};

/// Standard form: minimize C . X subject to A_k . X = b_k, X in the product
/// of the listed cones.
struct ConicProgram {
  std::string name;
  std::vector<Cone> blocks;
  SymBlockMatrix objective;
  std::vector<LinearConstraint> constraints;

  // Throws Error(dimension_mismatch / invalid_parameter) on bad shape.
  void validate() const;
  // Total cone degree (sum of block dimensions).
  int degree() const;
};

/// Primal/dual block values. PSD blocks are dim x dim, nonneg blocks are
/// stored as dim x 1 columns.
using BlockValues = std::vector<Eigen::MatrixXd>;

enum class SolveStatus { optimal, max_iter, numerical_failure };

const char* to_string(SolveStatus status) noexcept;

/// standard runs in double. automatic retries in long double when the
/// double run does not reach the tolerance. extended skips the double run.
enum class SolverPrecision { automatic, standard, extended };

struct SolverSettings {
  double tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.98;
  SolverPrecision precision = SolverPrecision::automatic;
};

struct IterationLog {
  int iteration = 0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double mu = 0.0;
  double primal_step = 0.0;
  double dual_step = 0.0;
};

struct SdpSolution {
  BlockValues X;
  Eigen::VectorXd dual_y;
  BlockValues dual_Z;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;  // primal_obj - dual_obj
  int iterations = 0;
  SolveStatus status = SolveStatus::numerical_failure;
  std::string failure_reason;      // set for numerical_failure
  bool extended_precision = false;  // the returned run used long double
  std::vector<IterationLog> log;
};

struct Residuals {
  double primal = 0.0;  // max_k |A_k . X - b_k| / (1 + |b_k|)
  double dual = 0.0;    // max |C - sum_k y_k A_k - Z| / (1 + max |C|)
  double gap = 0.0;     // C . X - b^T y
};

// Inner product of coefficient data with block values.
double inner(const SymBlockMatrix& coeffs, const BlockValues& X);

Residuals residuals(const ConicProgram& program, const BlockValues& X,
                    const Eigen::VectorXd& y, const BlockValues& Z);

/// Infeasible-start primal-dual path-following method with Nesterov-Todd
/// scaling and Mehrotra predictor-corrector steps. The search direction
/// comes from a dense Cholesky solve of the Schur complement
/// M_kl = sum_blocks A_k . (W A_l W). Starting point: X = alpha_b I,
/// Z = beta_b I per block with
///   alpha_b = max(10, sqrt(d_b), d_b * max_k (1 + |b_k|) / (1 + ||A_k^b||_F))
///   beta_b  = max(10, sqrt(d_b), max_k ||A_k^b||_F, ||C^b||_F)
/// and y = 0.
SdpSolution solve(const ConicProgram& program, const SolverSettings& settings = {});

/// Symmetric eigendecomposition, eigenvalues sorted descending with matching
/// orthonormal eigenvector columns. The input is symmetrized first.
struct SymEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SymEig sym_eig(const Eigen::MatrixXd& matrix);

// Eigenvalues at or below this fraction of the largest magnitude count as zero.
inline constexpr double kRelativeZeroEigenvalue = 1e-10;

// Frobenius-nearest PSD matrix (negative eigenvalues clipped).
Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& matrix);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& matrix);

// Spectral norm of a symmetric matrix.
double spectral_norm_sym(const Eigen::MatrixXd& matrix);

/// Line-oriented text dump, one record per line:
///   program <name>
///   blocks <kind> <dim> [<kind> <dim> ...]      kind is psd | nonneg
///   objective <nnz> (<block> <row> <col> <value>)*
///   constraint <k> <rhs> <nnz> (<block> <row> <col> <value>)*
/// Values are printed with 17 significant digits.
void write_program_dump(const ConicProgram& program, std::ostream& out);
ConicProgram read_program_dump(std::istream& in);

}  // namespace psksdr
