#include "psksdr/detection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "psksdr/error.hpp"

namespace psksdr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(DetectionMethod method) noexcept {
  switch (method) {
    case DetectionMethod::rsdr: return "rsdr";
    case DetectionMethod::ersdr1: return "ersdr1";
    case DetectionMethod::ersdr2: return "ersdr2";
    case DetectionMethod::ml: return "ml";
  }
  return "unknown";
}

std::vector<int> round_indices(const VectorXd& y, const Constellation& constellation) {
  if (y.size() % 2 != 0) throw Error(ErrorCode::dimension_mismatch, "round_symbols: y must have even length");
  const auto n = y.size() / 2;
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < constellation.M; ++j) {
      const double score = constellation.s_re[j] * y[i] + constellation.s_im[j] * y[n + i];
      if (score > best) {
        best = score;
        out[static_cast<std::size_t>(i)] = j;
      }
    }
  }
  return out;
}

Eigen::VectorXcd round_symbols(const VectorXd& y, const Constellation& constellation) {
  return symbols_from_indices(round_indices(y, constellation), constellation);
}

std::vector<int> round_from_t(const VectorXd& t, int n, int M) {
  if (t.size() != static_cast<Eigen::Index>(n) * M) throw Error(ErrorCode::dimension_mismatch, "round_from_t: t has wrong length");
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    t.segment(i * M, M).maxCoeff(&out[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::uint64_t enumeration_size(int n, int M) {
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(M)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= static_cast<std::uint64_t>(M);
  }
  return total;
}

DetectionResult ml_bruteforce(const MimoInstance& instance, std::uint64_t max_enum) {
  const int n = instance.n;
  const int M = instance.constellation.M;
  const std::uint64_t total = enumeration_size(n, M);
  if (total > max_enum) {
    throw Error(ErrorCode::size_guard, "ml_bruteforce: M^n = " + std::to_string(total) + " exceeds the limit " +
                                           std::to_string(max_enum));
  }
  const Eigen::MatrixXcd Q = instance.H.adjoint() * instance.H;
  const Eigen::VectorXcd c = -instance.H.adjoint() * instance.r;
  const auto& s = instance.constellation.symbols;

  std::vector<int> index(static_cast<std::size_t>(n), 0);
  Eigen::VectorXcd x(n);
  for (int i = 0; i < n; ++i) x[i] = s[0];

  DetectionResult best;
  best.method = DetectionMethod::ml;
  best.objective = std::numeric_limits<double>::infinity();
  for (std::uint64_t count = 0; count < total; ++count) {
    const double value = x.dot(Q * x).real() + 2.0 * c.dot(x).real();
    if (value < best.objective) {
      best.objective = value;
      best.x_index = index;
    }
    // Odometer with the last antenna fastest, i.e. lexicographic order.
    for (int i = n - 1; i >= 0; --i) {
      auto& k = index[static_cast<std::size_t>(i)];
      k = (k + 1) % M;
      x[i] = s[static_cast<std::size_t>(k)];
      if (k != 0) break;
    }
  }
  best.x_hat = symbols_from_indices(best.x_index, instance.constellation);
  return best;
}

TightnessCheck tightness_condition(const MimoInstance& instance) {
  TightnessCheck out;
  const Eigen::MatrixXcd Q = instance.H.adjoint() * instance.H;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Q, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::numerical, "tightness_condition: eigensolver failed");
  out.lambda_min = eig.eigenvalues()[0];
  out.noise_inf_norm = (instance.H.adjoint() * instance.nu).cwiseAbs().maxCoeff();
  out.margin = out.lambda_min * std::sin(std::numbers::pi / instance.constellation.M) - out.noise_inf_norm;
  out.holds = out.margin > 0.0;
  return out;
}

double rank1_ratio(const MatrixXd& block) {
  if (block.rows() != block.cols() || block.size() == 0) {
    throw Error(ErrorCode::dimension_mismatch, "rank1_ratio: expected a non-empty square matrix");
  }
  const auto eig = sym_eig(block);
  const double top = eig.values[0];
  if (!(top > 0.0)) throw Error(ErrorCode::invalid_parameter, "rank1_ratio: largest eigenvalue is not positive");
  if (eig.values.size() < 2) return 0.0;
  return std::clamp(eig.values[1] / top, 0.0, 1.0);
}

double symbol_error_rate(const std::vector<int>& x_hat, const std::vector<int>& x_star) {
  if (x_hat.size() != x_star.size()) throw Error(ErrorCode::dimension_mismatch, "symbol_error_rate: length mismatch");
  if (x_hat.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) wrong += x_hat[i] != x_star[i];
  return static_cast<double>(wrong) / static_cast<double>(x_hat.size());
}

double symbol_error_rate(const Eigen::VectorXcd& x_hat, const Eigen::VectorXcd& x_star) {
  if (x_hat.size() != x_star.size()) throw Error(ErrorCode::dimension_mismatch, "symbol_error_rate: length mismatch");
  if (x_hat.size() == 0) return 0.0;
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < x_hat.size(); ++i) wrong += std::abs(x_hat[i] - x_star[i]) > 1e-9;
  return static_cast<double>(wrong) / static_cast<double>(x_hat.size());
}

RelaxedDetection detect(const MimoInstance& instance, Relaxation model, const SolverSettings& settings,
                        const BuildOptions& options) {
  const auto data = realify(instance);
  const ConicProgram program = build_relaxation(model, data, options);
  RelaxedDetection out;
  const auto start = std::chrono::steady_clock::now();
  out.solution = solve(program, settings);
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.relaxation_objective = out.solution.primal_obj;

  auto& det = out.detection;
  switch (model) {
    case Relaxation::rsdr:
      det.method = DetectionMethod::rsdr;
      det.x_index = round_indices(extract_rsdr(out.solution, data.n).y, data.constellation);
      break;
    case Relaxation::ersdr1:
      det.method = DetectionMethod::ersdr1;
      det.x_index = round_indices(extract_rsdr(out.solution, data.n).y, data.constellation);
      break;
    case Relaxation::ersdr2:
      det.method = DetectionMethod::ersdr2;
      det.x_index = round_from_t(extract_ersdr2(out.solution, data.n, data.M).t, data.n, data.M);
      break;
  }
  det.x_hat = symbols_from_indices(det.x_index, data.constellation);
  det.objective = objective_q(det.x_hat, data);
  det.rank1_ratio = rank1_ratio(out.solution.X[0]);
  if (out.solution.status == SolveStatus::optimal) {
    const double obj = out.relaxation_objective;
    det.is_tight = det.rank1_ratio <= kTightRankRatio &&
                   std::abs(obj - det.objective) <= kTightObjective * (1.0 + std::abs(obj));
  }
  return out;
}

}  // namespace psksdr
