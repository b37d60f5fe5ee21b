#pragma once
// Helpers shared by the unit tests and the acceptance runner.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "psksdr/model.hpp"
#include "psksdr/relaxations.hpp"
#include "psksdr/rng.hpp"
#include "psksdr/sdp.hpp"

namespace psksdr::testing {

inline Eigen::VectorXd random_weights(CounterRng& rng, int k) {
  // Normalized exponentials: a uniform draw from the simplex.
  Eigen::VectorXd w(k);
  for (int l = 0; l < k; ++l) w[l] = -std::log(rng.uniform());
  return w / w.sum();
}

// Random correlation matrix R (unit diagonal, PSD) of size n, mixed with the
// all-ones matrix so that both weakly and strongly coupled antennas appear.
inline Eigen::MatrixXd random_correlation(CounterRng& rng, int n) {
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal_pair().real();
  Eigen::MatrixXd R = G * G.transpose();
  const Eigen::VectorXd d = R.diagonal().cwiseSqrt().cwiseInverse();
  R = d.asDiagonal() * R * d.asDiagonal();
  const double rho = rng.uniform();
  return rho * R + (1.0 - rho) * Eigen::MatrixXd::Ones(n, n);
}

inline std::vector<std::vector<int>> random_integral_points(CounterRng& rng, int n, int M, int k) {
  std::vector<std::vector<int>> pts(k, std::vector<int>(n));
  for (auto& p : pts)
    for (auto& v : p) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(M)));
  return pts;
}

/// Feasible non-integral point of the (y, Y, t) relaxation: a convex
/// combination of k integral points, after which the cross-antenna part of
/// Y - yy^T is reshaped by a Hadamard product with R (x) J_2. The per-antenna
/// 2x2 blocks, which the lifting constraints pin, are untouched, and the
/// result stays PSD by the Schur product theorem.
inline Ersdr1Point random_ersdr1_point(const RealifiedData& data, CounterRng& rng, int k) {
  const int n = data.n, M = data.M;
  const auto pts = random_integral_points(rng, n, M, k);
  const Eigen::VectorXd w = random_weights(rng, k);
  Ersdr1Point p;
  p.t = Eigen::VectorXd::Zero(n * M);
  p.y = Eigen::VectorXd::Zero(2 * n);
  std::vector<Eigen::VectorXd> ys;
  for (int l = 0; l < k; ++l) {
    const Eigen::VectorXd tl = one_hot(pts[l], M);
    ys.push_back(data.Shat * tl);
    p.t += w[l] * tl;
    p.y += w[l] * ys.back();
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int l = 0; l < k; ++l) {
    const Eigen::VectorXd d = ys[l] - p.y;
    K += w[l] * d * d.transpose();
  }
  const Eigen::MatrixXd R = random_correlation(rng, n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b) K(a, b) *= R(a % n, b % n);
  p.Y = p.y * p.y.transpose() + K;
  return p;
}

// Same recipe for (t, T): T - tt^T is reshaped by R (x) J_M, which keeps the
// diagonal blocks Diag(t_i) - t_i t_i^T.
inline Ersdr2Point random_ersdr2_point(const RealifiedData& data, CounterRng& rng, int k) {
  const int n = data.n, M = data.M;
  const auto pts = random_integral_points(rng, n, M, k);
  const Eigen::VectorXd w = random_weights(rng, k);
  Ersdr2Point p;
  p.t = Eigen::VectorXd::Zero(n * M);
  std::vector<Eigen::VectorXd> ts;
  for (int l = 0; l < k; ++l) {
    ts.push_back(one_hot(pts[l], M));
    p.t += w[l] * ts.back();
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * M, n * M);
  for (int l = 0; l < k; ++l) {
    const Eigen::VectorXd d = ts[l] - p.t;
    K += w[l] * d * d.transpose();
  }
  const Eigen::MatrixXd R = random_correlation(rng, n);
  for (int a = 0; a < n * M; ++a)
    for (int b = 0; b < n * M; ++b) K(a, b) *= R(a / M, b / M);
  p.T = p.t * p.t.transpose() + K;
  return p;
}

// min X11 s.t. X11 + X22 = 2, X psd (2x2). Optimum 0.
inline ConicProgram trace_pinned_program() {
  ConicProgram p;
  p.name = "trace_pinned";
  p.blocks = {psd_cone(2)};
  p.objective.add(0, 0, 0, 1.0);
  LinearConstraint c;
  c.coeffs.add(0, 0, 0, 1.0);
  c.coeffs.add(0, 1, 1, 1.0);
  c.rhs = 2.0;
  p.constraints.push_back(c);
  return p;
}

// min tr(X) s.t. X12 = 1, X psd (2x2). Optimum 2 at the all-ones matrix.
inline ConicProgram offdiag_pinned_program() {
  ConicProgram p;
  p.name = "offdiag_pinned";
  p.blocks = {psd_cone(2)};
  p.objective.add(0, 0, 0, 1.0);
  p.objective.add(0, 1, 1, 1.0);
  LinearConstraint c;
  c.coeffs.add(0, 0, 1, 0.5);  // off-diagonal entries count twice
  c.rhs = 1.0;
  p.constraints.push_back(c);
  return p;
}

// Noiseless identity channel: r = x*, so Q = I and c = -x*.
inline MimoInstance identity_channel_instance(int n, int M, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<int> idx(n);
  for (auto& v : idx) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(M)));
  return make_instance(Eigen::MatrixXcd::Identity(n, n), idx, Eigen::VectorXcd::Zero(n), M);
}

}  // namespace psksdr::testing
