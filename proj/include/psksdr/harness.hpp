#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "psksdr/relaxations.hpp"

namespace psksdr {

struct SweepConfig {
  int m = 10;
  int n = 10;
  int M = 8;
  std::vector<double> snr_grid_db{5.0, 10.0, 15.0, 20.0};
  int trials = 5;
  std::uint64_t base_seed = 20170305;
  std::vector<Relaxation> models{Relaxation::rsdr, Relaxation::ersdr1, Relaxation::ersdr2};
  double tol = 1e-8;
  int workers = 1;
  std::string output_path;            // records CSV; empty for none
  double equivalence_tol = 1e-3;      // per-trial verdict
  std::uint64_t ml_max_enum = 10'000; // ML oracle only when M^n is at most this

  void validate() const;
  bool has(Relaxation model) const;
};

// Full protocol: 100 trials per SNR point.
SweepConfig full_protocol();

nlohmann::json config_to_json(const SweepConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
SweepConfig config_from_json(const nlohmann::json& doc);

inline constexpr int kModelCount = 3;

struct ModelOutcome {
  bool ran = false;
  double objective = 0.0;      // relaxation optimum
  double solve_seconds = 0.0;  // solve() only
  int iterations = 0;
  std::string status = "skipped";  // solver status, "error" or "skipped"
  double ser = 0.0;
  double rank1_ratio = 0.0;
  std::string error;
};

struct TrialRecord {
  int snr_index = 0;
  double snr_db = 0.0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  std::array<ModelOutcome, kModelCount> models;  // indexed by Relaxation
  bool equivalence_ran = false;
  double eq_obj_diff = 0.0;
  double eq_obj_rel_diff = 0.0;
  double eq_Y_residual = 0.0;
  double eq_y_residual = 0.0;
  bool eq_pass = false;
  double tight_margin = 0.0;
  bool tight_holds = false;
  bool ml_ran = false;
  double ml_objective = 0.0;
  double ml_ser = 0.0;

  const ModelOutcome& outcome(Relaxation model) const { return models[static_cast<int>(model)]; }
  ModelOutcome& outcome(Relaxation model) { return models[static_cast<int>(model)]; }
};

struct SnrSummary {
  double snr_db = 0.0;
  int trials = 0;
  std::array<double, kModelCount> mean_objective{};
  std::array<double, kModelCount> mean_seconds{};
  std::array<double, kModelCount> mean_ser{};
  std::array<int, kModelCount> optimal{};  // count of Optimal solves
  double mean_obj_diff = 0.0;
  double mean_obj_rel_diff = 0.0;
  double mean_Y_residual = 0.0;
  double mean_y_residual = 0.0;
  double eq_pass_fraction = 0.0;
  double tight_fraction = 0.0;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // sorted by (snr_index, trial_index)
  std::vector<SnrSummary> summary;
  std::vector<std::string> log;      // equivalence failures and solver errors
};

// Worker count after the PSKSDR_WORKERS override, at least 1.
int effective_workers(const SweepConfig& config);

using ProgressFn = std::function<void(const TrialRecord&)>;

// Trial seed = derive_seed(base_seed, snr_index, trial_index).
TrialRecord run_trial(const SweepConfig& config, int snr_index, int trial_index);
SweepResult run_sweep(const SweepConfig& config, const ProgressFn& progress = {});

std::vector<SnrSummary> summarize(const std::vector<TrialRecord>& records);

// Records without timings, so identical configs give identical bytes.
std::string records_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_records_csv(const std::string& text);
std::string timing_csv(const std::vector<TrialRecord>& records);
std::string plotdata_csv(const std::vector<SnrSummary>& summary);

void emit_csv(const std::vector<TrialRecord>& records, const std::string& path);
void emit_timing_csv(const std::vector<TrialRecord>& records, const std::string& path);
void emit_plotdata(const std::vector<TrialRecord>& records, const std::string& path);

nlohmann::json record_to_json(const TrialRecord& record);

}  // namespace psksdr
