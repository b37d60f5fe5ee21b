#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

namespace psksdr {

using cplx = std::complex<double>;

/// M-PSK alphabet. Symbol j (0-based here) is exp(i * 2 pi j / M), so the
/// first symbol is 1 and the rest follow counter-clockwise.
struct Constellation {
  int M = 0;
  std::vector<cplx> symbols;
  Eigen::VectorXd s_re;  // Re(s_j)
  Eigen::VectorXd s_im;  // Im(s_j)
};

Constellation make_constellation(int M);

inline constexpr double kNoiselessSnr = std::numeric_limits<double>::infinity();

/// One channel use r = H x* + nu. Symbols are stored both as values and as
/// 0-based constellation indices.
struct MimoInstance {
  int m = 0;
  int n = 0;
  Constellation constellation;
  Eigen::MatrixXcd H;
  Eigen::VectorXcd x_star;
  std::vector<int> x_index;
  Eigen::VectorXcd nu;
  Eigen::VectorXcd r;
  double snr_db = kNoiselessSnr;
  std::uint64_t seed = 0;
};

double snr_linear(double snr_db);

// Per-entry noise variance n / SNR_linear; 0 for the noiseless sentinel.
double noise_variance(int n, double snr_db);

/// Draws H (i.i.d. CN(0,1)), x* uniform over the constellation and nu
/// (i.i.d. CN(0, n / SNR)) from three independent substreams of `seed`.
MimoInstance sample_instance(int m, int n, int M, double snr_db, std::uint64_t seed);

// Assembles an instance from explicit data; r is computed here.
MimoInstance make_instance(Eigen::MatrixXcd H, std::vector<int> x_index,
                           Eigen::VectorXcd nu, int M, double snr_db = kNoiselessSnr,
                           std::uint64_t seed = 0);

/// Real lifted data shared by all relaxations.
///
/// Layout of the real 2n-vector y: entries 0..n-1 hold Re(x), entries
/// n..2n-1 hold Im(x). The Mn-vector t is ordered block-wise, t[i*M + j] =
/// t_{i,j}.
struct RealifiedData {
  int n = 0;
  int M = 0;
  Constellation constellation;
  Eigen::MatrixXcd Q;     // H^H H
  Eigen::VectorXcd c;     // -H^H r
  Eigen::MatrixXd Qhat;   // [[Re Q, -Im Q], [Im Q, Re Q]]
  Eigen::VectorXd chat;   // [Re c; Im c]
  Eigen::MatrixXcd S;     // I_n (x) s^T
  Eigen::MatrixXd Shat;   // [Re S; Im S]
  Eigen::MatrixXd A;      // I_n (x) e_M^T
  Eigen::MatrixXd Qbar;   // Shat^T Qhat Shat
  Eigen::VectorXd cbar;   // Shat^T chat
  std::vector<Eigen::Matrix3d> P;  // P_j = p_j p_j^T with p_j = (1, Re s_j, Im s_j)
  double r_norm_sq = 0.0;
};

RealifiedData realify(const MimoInstance& instance);

// x^H Q x + 2 Re(c^H x). Adding ||r||^2 gives ||Hx - r||^2.
double objective_q(const Eigen::VectorXcd& x, const RealifiedData& data);

// Symbol vector for 0-based constellation indices.
Eigen::VectorXcd symbols_from_indices(const std::vector<int>& index, const Constellation& constellation);

// y = [Re x; Im x].
Eigen::VectorXd realify_vector(const Eigen::VectorXcd& x);

}  // namespace psksdr
