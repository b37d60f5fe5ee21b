#include "psksdr/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "psksdr/error.hpp"
#include "psksdr/rng.hpp"

namespace psksdr {

Constellation make_constellation(int M) {
  if (M < 2) {
    throw Error(ErrorCode::invalid_parameter,
                "constellation order must be at least 2, got " + std::to_string(M));
  }
  Constellation out;
  out.M = M;
  out.symbols.resize(M);
  out.s_re.resize(M);
  out.s_im.resize(M);
  for (int j = 0; j < M; ++j) {
    const double theta = 2.0 * j * std::numbers::pi / M;
    out.s_re[j] = std::cos(theta);
    out.s_im[j] = std::sin(theta);
    out.symbols[j] = cplx(out.s_re[j], out.s_im[j]);
  }
  return out;
}

double snr_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

double noise_variance(int n, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return static_cast<double>(n) / snr_linear(snr_db);
}

Eigen::VectorXcd symbols_from_indices(const std::vector<int>& index,
                                      const Constellation& constellation) {
  Eigen::VectorXcd x(static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= constellation.M) {
      throw Error(ErrorCode::invalid_parameter, "symbol index out of range");
    }
    x[static_cast<Eigen::Index>(i)] = constellation.symbols[index[i]];
  }
  return x;
}

MimoInstance make_instance(Eigen::MatrixXcd H, std::vector<int> x_index, Eigen::VectorXcd nu,
                           int M, double snr_db, std::uint64_t seed) {
  const auto m = static_cast<int>(H.rows());
  const auto n = static_cast<int>(H.cols());
  if (n < 1 || m < n) {
    throw Error(ErrorCode::invalid_parameter, "need m >= n >= 1");
  }
  if (static_cast<int>(x_index.size()) != n || nu.size() != m) {
    throw Error(ErrorCode::dimension_mismatch, "instance vectors do not match H");
  }
  MimoInstance inst;
  inst.m = m;
  inst.n = n;
  inst.constellation = make_constellation(M);
  inst.x_star = symbols_from_indices(x_index, inst.constellation);
  inst.x_index = std::move(x_index);
  inst.H = std::move(H);
  inst.nu = std::move(nu);
  inst.r = inst.H * inst.x_star + inst.nu;
  inst.snr_db = snr_db;
  inst.seed = seed;
  return inst;
}

MimoInstance sample_instance(int m, int n, int M, double snr_db, std::uint64_t seed) {
  if (n < 1 || m < n) {
    throw Error(ErrorCode::invalid_parameter, "need m >= n >= 1");
  }
  if (M < 2) {
    throw Error(ErrorCode::invalid_parameter, "constellation order must be at least 2");
  }
  if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0)) {
    throw Error(ErrorCode::invalid_parameter, "snr_db must be finite or +inf");
  }

  auto channel = CounterRng::stream(seed, kStreamChannel);
  Eigen::MatrixXcd H(m, n);
  // Column-major fill; the draw order is part of the reproducibility contract.
  for (int col = 0; col < n; ++col)
    for (int row = 0; row < m; ++row) H(row, col) = channel.complex_normal(1.0);

  auto symbols = CounterRng::stream(seed, kStreamSymbols);
  std::vector<int> x_index(n);
  for (int i = 0; i < n; ++i) x_index[i] = static_cast<int>(symbols.below(static_cast<std::uint64_t>(M)));

  const double sigma2 = noise_variance(n, snr_db);
  Eigen::VectorXcd nu = Eigen::VectorXcd::Zero(m);
  if (sigma2 > 0.0) {
    auto noise = CounterRng::stream(seed, kStreamNoise);
    for (int row = 0; row < m; ++row) nu[row] = noise.complex_normal(sigma2);
  }
  return make_instance(std::move(H), std::move(x_index), std::move(nu), M, snr_db, seed);
}

Eigen::VectorXd realify_vector(const Eigen::VectorXcd& x) {
  const auto n = x.size();
  Eigen::VectorXd y(2 * n);
  y.head(n) = x.real();
  y.tail(n) = x.imag();
  return y;
}

RealifiedData realify(const MimoInstance& instance) {
  const int n = instance.n;
  const int M = instance.constellation.M;
  RealifiedData d;
  d.n = n;
  d.M = M;
  d.constellation = instance.constellation;
  d.Q = instance.H.adjoint() * instance.H;
  d.Q = 0.5 * (d.Q + d.Q.adjoint()).eval();
  d.c = -(instance.H.adjoint() * instance.r);

  d.Qhat.resize(2 * n, 2 * n);
  d.Qhat.topLeftCorner(n, n) = d.Q.real();
  d.Qhat.topRightCorner(n, n) = -d.Q.imag();
  d.Qhat.bottomLeftCorner(n, n) = d.Q.imag();
  d.Qhat.bottomRightCorner(n, n) = d.Q.real();
  d.chat = realify_vector(d.c);

  const auto& s = d.constellation;
  d.S = Eigen::MatrixXcd::Zero(n, n * M);
  d.Shat = Eigen::MatrixXd::Zero(2 * n, n * M);
  d.A = Eigen::MatrixXd::Zero(n, n * M);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < M; ++j) {
      d.S(i, i * M + j) = s.symbols[j];
      d.Shat(i, i * M + j) = s.s_re[j];
      d.Shat(n + i, i * M + j) = s.s_im[j];
      d.A(i, i * M + j) = 1.0;
    }
  }
  d.Qbar = d.Shat.transpose() * d.Qhat * d.Shat;
  d.Qbar = 0.5 * (d.Qbar + d.Qbar.transpose()).eval();
  d.cbar = d.Shat.transpose() * d.chat;

  d.P.resize(M);
  for (int j = 0; j < M; ++j) {
    const Eigen::Vector3d p(1.0, s.s_re[j], s.s_im[j]);
    d.P[j] = p * p.transpose();
  }
  d.r_norm_sq = instance.r.squaredNorm();
  return d;
}

double objective_q(const Eigen::VectorXcd& x, const RealifiedData& data) {
  if (x.size() != data.n) {
    throw Error(ErrorCode::dimension_mismatch,
                "objective_q: x has " + std::to_string(x.size()) + " entries, expected " +
                    std::to_string(data.n));
  }
  const cplx quad = x.dot(data.Q * x);  // dot() conjugates the left operand
  const cplx lin = data.c.dot(x);
  return quad.real() + 2.0 * lin.real();
}

}  // namespace psksdr
