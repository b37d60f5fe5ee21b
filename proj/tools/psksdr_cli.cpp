// Command line front end. Talks to the library only through psksdr.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "psksdr/psksdr.h"

namespace {

// Exit codes: 0 success, 1 negative verdict, 2 library error.
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

struct CliError {
  int code;
};

void check(psk_status status) {
  if (status == PSK_OK) return;
  std::cerr << "error (" << psk_status_name(status) << "): " << psk_last_error() << '\n';
  throw CliError{kExitError};
}

class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { psk_string_free(ptr_); }
  char** out() { return &ptr_; }
  const char* c_str() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

class Instance {
 public:
  explicit Instance(const std::string& path) { check(psk_instance_load(path.c_str(), &ptr_)); }
  Instance(const Instance&) = delete;
  Instance& operator=(const Instance&) = delete;
  ~Instance() { psk_instance_free(ptr_); }
  const psk_instance* get() const { return ptr_; }

 private:
  psk_instance* ptr_ = nullptr;
};

void emit(const Text& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text.c_str() << '\n';
    return;
  }
  std::ofstream out(out_path);
  out << text.c_str() << '\n';
  if (!out) {
    std::cerr << "error: cannot write " << out_path << '\n';
    throw CliError{kExitError};
  }
}

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw CLI::ValidationError("--snr", "expected a number or 'inf'");
  return v;
}

int precision_code(const std::string& name) {
  if (name == "auto") return PSK_PRECISION_AUTO;
  if (name == "standard") return PSK_PRECISION_STANDARD;
  return PSK_PRECISION_EXTENDED;
}

struct SolverFlags {
  double tol = 1e-8;
  int max_iter = 200;
  std::string precision = "auto";
  bool drop_redundant = false;

  void attach(CLI::App* app) {
    app->add_option("--tol", tol, "Solver tolerance")->check(CLI::PositiveNumber);
    app->add_option("--max-iter", max_iter, "Iteration limit")->check(CLI::NonNegativeNumber);
    app->add_option("--precision", precision, "auto, standard or extended")
        ->check(CLI::IsMember({"auto", "standard", "extended"}));
    app->add_flag("--drop-redundant", drop_redundant, "Omit the explicit t >= 0 cone of ersdr2");
  }

  psk_solve_options options() const {
    psk_solve_options o;
    psk_solve_options_default(&o);
    o.tol = tol;
    o.max_iter = max_iter;
    o.precision = precision_code(precision);
    o.drop_redundant = drop_redundant ? 1 : 0;
    return o;
  }
};

void print_progress(const char* record_json, void*) { std::cerr << record_json << '\n'; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot read " << path << '\n';
    throw CliError{kExitError};
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-PSK MIMO semidefinite relaxations: solve, compare and certify"};
  app.require_subcommand(1);
  app.set_version_flag("--version", psk_version());

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  int gen_m = 10, gen_n = 10, gen_M = 8;
  std::string gen_snr = "10";
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--m", gen_m, "Receive antennas");
  gen->add_option("--n", gen_n, "Transmit antennas");
  gen->add_option("--M", gen_M, "Constellation size");
  gen->add_option("--snr", gen_snr, "SNR in dB, or inf for no noise");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--out,-o", gen_out, "Output file (default stdout)");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one relaxation");
  std::string solve_instance, solve_model = "ersdr1", solve_dump, solve_out;
  SolverFlags solve_flags;
  solve->add_option("--instance", solve_instance, "Instance JSON")->required();
  solve->add_option("--model", solve_model, "rsdr, ersdr1 or ersdr2")
      ->check(CLI::IsMember({"rsdr", "ersdr1", "ersdr2"}));
  solve->add_option("--dump", solve_dump, "Write the assembled conic program here");
  solve->add_option("--out,-o", solve_out, "Output file (default stdout)");
  solve_flags.attach(solve);

  // verify-equivalence
  auto* verify = app.add_subcommand("verify-equivalence", "Compare the two enhanced relaxations");
  std::string verify_instance, verify_mode = "construct", verify_out;
  double verify_tol = 1e-6;
  SolverFlags verify_flags;
  verify->add_option("--instance", verify_instance, "Instance JSON")->required();
  verify->add_option("--tol", verify_tol, "Verdict tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--mode", verify_mode, "construct, independent or lift")
      ->check(CLI::IsMember({"construct", "independent", "lift"}));
  verify->add_option("--solver-tol", verify_flags.tol, "Solver tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--out,-o", verify_out, "Output file (default stdout)");

  // tightness
  auto* tight = app.add_subcommand("tightness", "Evaluate the sufficient tightness condition");
  std::string tight_instance, tight_out;
  tight->add_option("--instance", tight_instance, "Instance JSON")->required();
  tight->add_option("--out,-o", tight_out, "Output file (default stdout)");

  // ml
  auto* ml = app.add_subcommand("ml", "Exhaustive maximum-likelihood detection");
  std::string ml_instance, ml_out;
  std::uint64_t ml_max_enum = 10'000'000;
  ml->add_option("--instance", ml_instance, "Instance JSON")->required();
  ml->add_option("--max-enum", ml_max_enum, "Refuse when M^n exceeds this");
  ml->add_option("--out,-o", ml_out, "Output file (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over SNR");
  std::string sweep_config, sweep_csv, sweep_timing, sweep_plot, sweep_out;
  int sw_m = 0, sw_n = 0, sw_M = 0, sw_trials = 0, sw_workers = 0;
  std::vector<double> sw_grid;
  std::vector<std::string> sw_models;
  std::uint64_t sw_seed = 0;
  double sw_tol = 0.0;
  bool sw_full = false, sw_progress = false;
  sweep->add_option("--config", sweep_config, "JSON config file");
  sweep->add_flag("--full", sw_full, "Full protocol: 100 trials per SNR");
  sweep->add_option("--m", sw_m, "Receive antennas");
  sweep->add_option("--n", sw_n, "Transmit antennas");
  sweep->add_option("--M", sw_M, "Constellation size");
  sweep->add_option("--snr-grid", sw_grid, "SNR values in dB")->delimiter(',');
  sweep->add_option("--trials", sw_trials, "Trials per SNR");
  sweep->add_option("--seed", sw_seed, "Base seed");
  sweep->add_option("--models", sw_models, "Relaxations to solve")
      ->delimiter(',')
      ->check(CLI::IsMember({"rsdr", "ersdr1", "ersdr2"}));
  sweep->add_option("--tol", sw_tol, "Solver tolerance");
  sweep->add_option("--workers", sw_workers, "Worker threads (PSKSDR_WORKERS overrides)");
  sweep->add_option("--csv", sweep_csv, "Per-trial records CSV");
  sweep->add_option("--timing", sweep_timing, "Per-trial solve times CSV");
  sweep->add_option("--plotdata", sweep_plot, "Per-SNR means CSV");
  sweep->add_option("--out,-o", sweep_out, "Summary JSON (default stdout)");
  sweep->add_flag("--progress", sw_progress, "Print each finished trial to stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      psk_instance* inst = nullptr;
      check(psk_instance_generate(gen_m, gen_n, gen_M, parse_snr(gen_snr), gen_seed, &inst));
      Text text;
      const psk_status st = psk_instance_to_json(inst, text.out());
      psk_instance_free(inst);
      check(st);
      emit(text, gen_out);
    } else if (*solve) {
      Instance inst(solve_instance);
      const auto opts = solve_flags.options();
      Text text;
      check(psk_solve(inst.get(), solve_model.c_str(), &opts, solve_dump.empty() ? nullptr : solve_dump.c_str(),
                      text.out()));
      emit(text, solve_out);
    } else if (*verify) {
      Instance inst(verify_instance);
      const auto opts = verify_flags.options();
      Text text;
      int verdict = 0;
      check(psk_verify_equivalence(inst.get(), verify_mode.c_str(), verify_tol, &opts, text.out(), &verdict));
      emit(text, verify_out);
      return verdict ? 0 : kExitFail;
    } else if (*tight) {
      Instance inst(tight_instance);
      Text text;
      check(psk_tightness(inst.get(), text.out(), nullptr));
      emit(text, tight_out);
    } else if (*ml) {
      Instance inst(ml_instance);
      Text text;
      check(psk_ml(inst.get(), ml_max_enum, text.out()));
      emit(text, ml_out);
    } else if (*sweep) {
      // Start from the config file (or the defaults), then apply flags.
      nlohmann::json doc = nlohmann::json::object();
      if (!sweep_config.empty()) {
        try {
          doc = nlohmann::json::parse(read_file(sweep_config));
        } catch (const nlohmann::json::exception& e) {
          std::cerr << "error: " << sweep_config << ": " << e.what() << '\n';
          return kExitError;
        }
      }
      if (sw_full) doc["trials"] = 100;
      if (sw_m) doc["m"] = sw_m;
      if (sw_n) doc["n"] = sw_n;
      if (sw_M) doc["M"] = sw_M;
      if (!sw_grid.empty()) doc["snr_grid_db"] = sw_grid;
      if (sw_trials) doc["trials"] = sw_trials;
      if (sweep->count("--seed")) doc["base_seed"] = sw_seed;
      if (!sw_models.empty()) doc["models"] = sw_models;
      if (sw_tol > 0.0) doc["tol"] = sw_tol;
      if (sw_workers) doc["workers"] = sw_workers;
      Text text;
      check(psk_sweep(doc.dump().c_str(), sweep_csv.empty() ? nullptr : sweep_csv.c_str(),
                      sweep_timing.empty() ? nullptr : sweep_timing.c_str(),
                      sweep_plot.empty() ? nullptr : sweep_plot.c_str(), sw_progress ? print_progress : nullptr,
                      nullptr, text.out()));
      emit(text, sweep_out);
    }
  } catch (const CliError& e) {
    return e.code;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
