#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "psksdr/model.hpp"
#include "psksdr/relaxations.hpp"
#include "psksdr/sdp.hpp"

namespace psksdr {

enum class DetectionMethod { rsdr, ersdr1, ersdr2, ml };

const char* to_string(DetectionMethod method) noexcept;

struct DetectionResult {
  Eigen::VectorXcd x_hat;
  std::vector<int> x_index;  // 0-based
  double objective = 0.0;    // objective_q(x_hat)
  DetectionMethod method = DetectionMethod::ml;
  double rank1_ratio = 0.0;
  std::optional<bool> is_tight;
};

struct TightnessCheck {
  double lambda_min = 0.0;      // smallest eigenvalue of H^H H
  double noise_inf_norm = 0.0;  // max_i |(H^H nu)_i|
  double margin = 0.0;          // lambda_min sin(pi/M) - noise_inf_norm
  bool holds = false;
};

// Nearest symbol per antenna: argmax_j Re(s_j) y_i + Im(s_j) y_{n+i}, ties to
// the smallest j.
std::vector<int> round_indices(const Eigen::VectorXd& y, const Constellation& constellation);
Eigen::VectorXcd round_symbols(const Eigen::VectorXd& y, const Constellation& constellation);

// argmax_j t_{i,j} per antenna, ties to the smallest j.
std::vector<int> round_from_t(const Eigen::VectorXd& t, int n, int M);

inline constexpr std::uint64_t kDefaultMaxEnum = 10'000'000;

// Exhaustive minimum of objective_q; the first minimizer in lexicographic
// index order wins ties.
DetectionResult ml_bruteforce(const MimoInstance& instance, std::uint64_t max_enum = kDefaultMaxEnum);

// Number of candidate vectors M^n, saturating at UINT64_MAX.
std::uint64_t enumeration_size(int n, int M);

TightnessCheck tightness_condition(const MimoInstance& instance);

// lambda_2 / lambda_1 of a symmetric PSD matrix; 0 for exact rank one.
double rank1_ratio(const Eigen::MatrixXd& block);

double symbol_error_rate(const std::vector<int>& x_hat, const std::vector<int>& x_star);
double symbol_error_rate(const Eigen::VectorXcd& x_hat, const Eigen::VectorXcd& x_star);

inline constexpr double kTightRankRatio = 1e-6;
inline constexpr double kTightObjective = 1e-6;

struct RelaxedDetection {
  DetectionResult detection;
  SdpSolution solution;
  double relaxation_objective = 0.0;
  double solve_seconds = 0.0;  // solve() only
};

// Builds, solves and rounds one relaxation. is_tight is set when the solve
// reached Optimal: rank1_ratio <= 1e-6 and the relaxation objective matches
// objective_q(x_hat) within 1e-6 (1 + |obj|).
RelaxedDetection detect(const MimoInstance& instance, Relaxation model, const SolverSettings& settings = {},
                        const BuildOptions& options = {});

}  // namespace psksdr
