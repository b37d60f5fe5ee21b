#include "psksdr/psksdr.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "psksdr/detection.hpp"
#include "psksdr/equivalence.hpp"
#include "psksdr/error.hpp"
#include "psksdr/harness.hpp"
#include "psksdr/instance_io.hpp"
#include "psksdr/model.hpp"
#include "psksdr/relaxations.hpp"
#include "psksdr/sdp.hpp"

struct psk_instance {
  psksdr::MimoInstance value;
};

namespace {

using nlohmann::json;
using namespace psksdr;

thread_local std::string g_last_error;

psk_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return PSK_ERR_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return PSK_ERR_DIMENSION;
    case ErrorCode::numerical: return PSK_ERR_NUMERICAL;
    case ErrorCode::infeasible_input: return PSK_ERR_INFEASIBLE;
    case ErrorCode::construction: return PSK_ERR_CONSTRUCTION;
    case ErrorCode::size_guard: return PSK_ERR_SIZE_GUARD;
    case ErrorCode::io: return PSK_ERR_IO;
  }
  return PSK_ERR_INTERNAL;
}

template <class F>
psk_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return PSK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return PSK_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PSK_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PSK_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PSK_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::invalid_parameter, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_json(char** out, const json& doc) { *out = dup_string(doc.dump(2)); }

SolverSettings settings_from(const psk_solve_options* options) {
  psk_solve_options o;
  psk_solve_options_default(&o);
  if (options) o = *options;
  SolverSettings s;
  s.tol = o.tol;
  s.max_iter = o.max_iter;
  switch (o.precision) {
    case PSK_PRECISION_AUTO: s.precision = SolverPrecision::automatic; break;
    case PSK_PRECISION_STANDARD: s.precision = SolverPrecision::standard; break;
    case PSK_PRECISION_EXTENDED: s.precision = SolverPrecision::extended; break;
    default: throw Error(ErrorCode::invalid_parameter, "unknown precision option");
  }
  return s;
}

BuildOptions build_from(const psk_solve_options* options) {
  BuildOptions b;
  b.drop_redundant = options && options->drop_redundant != 0;
  return b;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json solution_json(const SdpSolution& sol) {
  json doc;
  doc["status"] = to_string(sol.status);
  doc["primal_obj"] = sol.primal_obj;
  doc["dual_obj"] = sol.dual_obj;
  doc["primal_residual"] = sol.primal_residual;
  doc["dual_residual"] = sol.dual_residual;
  doc["duality_gap"] = sol.duality_gap;
  doc["iterations"] = sol.iterations;
  doc["extended_precision"] = sol.extended_precision;
  if (!sol.failure_reason.empty()) doc["failure_reason"] = sol.failure_reason;
  return doc;
}

std::vector<int> one_based(const std::vector<int>& index) {
  std::vector<int> out(index);
  for (auto& k : out) ++k;
  return out;
}

json detection_json(const DetectionResult& det, const MimoInstance& inst) {
  json doc;
  doc["method"] = to_string(det.method);
  doc["x_hat_index"] = one_based(det.x_index);
  std::vector<double> re, im;
  for (const auto& x : det.x_hat) {
    re.push_back(x.real());
    im.push_back(x.imag());
  }
  doc["x_hat_re"] = re;
  doc["x_hat_im"] = im;
  doc["objective"] = det.objective;
  doc["rank1_ratio"] = det.rank1_ratio;
  if (det.is_tight) doc["is_tight"] = *det.is_tight;
  doc["ser"] = symbol_error_rate(det.x_index, inst.x_index);
  return doc;
}

json report_json(const EquivalenceReport& rep) {
  json doc;
  doc["obj_1"] = rep.obj_1;
  doc["obj_2"] = rep.obj_2;
  doc["obj_abs_diff"] = rep.obj_abs_diff;
  doc["obj_rel_diff"] = rep.obj_rel_diff;
  doc["connection_Y_residual"] = rep.connection_Y_residual;
  doc["connection_y_residual"] = rep.connection_y_residual;
  doc["feasibility_violations"] = rep.feasibility.violations;
  doc["tolerance"] = rep.tolerance;
  doc["failed"] = rep.failed;
  doc["verdict"] = rep.pass ? "pass" : "fail";
  return doc;
}

json summary_json(const SnrSummary& s) {
  json doc;
  doc["snr_db"] = s.snr_db;
  doc["trials"] = s.trials;
  doc["mean_obj_diff"] = s.mean_obj_diff;
  doc["mean_obj_rel_diff"] = s.mean_obj_rel_diff;
  doc["mean_Y_residual"] = s.mean_Y_residual;
  doc["mean_y_residual"] = s.mean_y_residual;
  doc["eq_pass_fraction"] = s.eq_pass_fraction;
  doc["tight_fraction"] = s.tight_fraction;
  for (int k = 0; k < kModelCount; ++k) {
    const auto model = static_cast<Relaxation>(k);
    doc[to_string(model)] = {{"mean_objective", s.mean_objective[k]},
                             {"mean_seconds", s.mean_seconds[k]},
                             {"mean_ser", s.mean_ser[k]},
                             {"optimal", s.optimal[k]}};
  }
  return doc;
}

}  // namespace

extern "C" {

const char* psk_version(void) { return "1.0.0"; }

const char* psk_last_error(void) { return g_last_error.c_str(); }

const char* psk_status_name(psk_status status) {
  switch (status) {
    case PSK_OK: return "ok";
    case PSK_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PSK_ERR_DIMENSION: return "dimension_mismatch";
    case PSK_ERR_NUMERICAL: return "numerical";
    case PSK_ERR_INFEASIBLE: return "infeasible_input";
    case PSK_ERR_CONSTRUCTION: return "construction";
    case PSK_ERR_SIZE_GUARD: return "size_guard";
    case PSK_ERR_IO: return "io";
    case PSK_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void psk_string_free(char* text) { std::free(text); }

void psk_solve_options_default(psk_solve_options* options) {
  if (!options) return;
  const SolverSettings s;
  options->tol = s.tol;
  options->max_iter = s.max_iter;
  options->precision = PSK_PRECISION_AUTO;
  options->drop_redundant = 0;
}

psk_status psk_instance_generate(int m, int n, int M, double snr_db, uint64_t seed, psk_instance** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = nullptr;
    auto inst = sample_instance(m, n, M, snr_db, seed);
    *out = new psk_instance{std::move(inst)};
  });
}

psk_status psk_instance_from_json(const char* text, psk_instance** out) {
  return guarded([&] {
    require(text != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::io, std::string("instance JSON: ") + e.what());
    }
    *out = new psk_instance{instance_from_json(doc)};
  });
}

psk_status psk_instance_load(const char* path, psk_instance** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    *out = new psk_instance{load_instance(path)};
  });
}

psk_status psk_instance_save(const psk_instance* instance, const char* path) {
  return guarded([&] {
    require(instance != nullptr && path != nullptr, "null argument");
    save_instance(instance->value, path);
  });
}

psk_status psk_instance_to_json(const psk_instance* instance, char** out_json) {
  return guarded([&] {
    require(instance != nullptr && out_json != nullptr, "null argument");
    put_json(out_json, instance_to_json(instance->value));
  });
}

psk_status psk_instance_dims(const psk_instance* instance, int* m, int* n, int* M) {
  return guarded([&] {
    require(instance != nullptr, "instance is null");
    if (m) *m = instance->value.m;
    if (n) *n = instance->value.n;
    if (M) *M = instance->value.constellation.M;
  });
}

void psk_instance_free(psk_instance* instance) { delete instance; }

psk_status psk_solve(const psk_instance* instance, const char* model, const psk_solve_options* options,
                     const char* dump_path, char** out_json) {
  return guarded([&] {
    require(instance != nullptr && model != nullptr && out_json != nullptr, "null argument");
    const auto& inst = instance->value;
    const Relaxation relaxation = relaxation_from_string(model);
    const SolverSettings settings = settings_from(options);
    const BuildOptions build = build_from(options);
    if (dump_path) {
      const auto program = build_relaxation(relaxation, realify(inst), build);
      std::ofstream out(dump_path);
      if (!out) throw Error(ErrorCode::io, std::string("cannot open ") + dump_path);
      write_program_dump(program, out);
      if (!out) throw Error(ErrorCode::io, std::string("failed writing ") + dump_path);
    }
    const auto result = detect(inst, relaxation, settings, build);
    json doc;
    doc["model"] = to_string(relaxation);
    doc["solver"] = solution_json(result.solution);
    doc["solve_time_seconds"] = result.solve_seconds;
    doc["relaxation_objective"] = result.relaxation_objective;
    doc["detection"] = detection_json(result.detection, inst);
    const auto data = realify(inst);
    if (relaxation == Relaxation::ersdr2) {
      const auto p = extract_ersdr2(result.solution, data.n, data.M);
      doc["t"] = vec_json(p.t);
      doc["feasibility_violations"] = check_ersdr2(p, data).violations;
    } else {
      const auto p = relaxation == Relaxation::rsdr ? extract_rsdr(result.solution, data.n)
                                                    : extract_ersdr1(result.solution, data.n, data.M);
      doc["y"] = vec_json(p.y);
      if (relaxation == Relaxation::ersdr1) {
        doc["t"] = vec_json(p.t);
        doc["feasibility_violations"] = check_ersdr1(p, data).violations;
      }
    }
    put_json(out_json, doc);
  });
}

psk_status psk_verify_equivalence(const psk_instance* instance, const char* mode, double tol,
                                  const psk_solve_options* options, char** out_json, int* verdict) {
  return guarded([&] {
    require(instance != nullptr && out_json != nullptr, "null argument");
    require(tol > 0.0, "tol must be positive");
    const std::string how = mode ? mode : "independent";
    const auto& inst = instance->value;
    const auto data = realify(inst);
    const SolverSettings settings = settings_from(options);
    const BuildOptions build = build_from(options);
    auto solve_model = [&](Relaxation model) { return solve(build_relaxation(model, data, build), settings); };

    json doc;
    doc["mode"] = how;
    EquivalenceReport rep;
    if (how == "independent") {
      const auto s1 = solve_model(Relaxation::ersdr1);
      const auto s2 = solve_model(Relaxation::ersdr2);
      doc["ersdr1_solver"] = solution_json(s1);
      doc["ersdr2_solver"] = solution_json(s2);
      rep = verify_equivalence(extract_ersdr1(s1, data.n, data.M), extract_ersdr2(s2, data.n, data.M), data, tol);
    } else if (how == "construct") {
      const auto s1 = solve_model(Relaxation::ersdr1);
      doc["ersdr1_solver"] = solution_json(s1);
      const auto p1 = extract_ersdr1(s1, data.n, data.M);
      const auto built = construct_T(p1, data);
      const auto check = check_trace(built.trace, p1);
      doc["trace"] = {{"rank_r", built.trace.rank_r},
                      {"eigen_residual", check.eigen_residual},
                      {"gram_mismatch", check.gram_mismatch},
                      {"contraction_excess", check.contraction_excess},
                      {"map_residual", check.map_residual},
                      {"weighted_excess", check.weighted_excess},
                      {"strict_identities", check.passes({})}};
      rep = verify_equivalence(p1, built.point, data, tol);
    } else if (how == "lift") {
      const auto s2 = solve_model(Relaxation::ersdr2);
      doc["ersdr2_solver"] = solution_json(s2);
      const auto p2 = extract_ersdr2(s2, data.n, data.M);
      rep = verify_equivalence(lift_to_ersdr1(p2, data), p2, data, tol);
    } else {
      throw Error(ErrorCode::invalid_parameter, "mode must be independent, construct or lift");
    }
    doc["report"] = report_json(rep);
    const bool pass = rep.pass;
    doc["verdict"] = pass ? "pass" : "fail";
    if (verdict) *verdict = pass ? 1 : 0;
    put_json(out_json, doc);
  });
}

psk_status psk_tightness(const psk_instance* instance, char** out_json, int* holds) {
  return guarded([&] {
    require(instance != nullptr && out_json != nullptr, "null argument");
    const auto check = tightness_condition(instance->value);
    json doc;
    doc["lambda_min"] = check.lambda_min;
    doc["noise_inf_norm"] = check.noise_inf_norm;
    doc["margin"] = check.margin;
    doc["holds"] = check.holds;
    if (holds) *holds = check.holds ? 1 : 0;
    put_json(out_json, doc);
  });
}

psk_status psk_ml(const psk_instance* instance, uint64_t max_enum, char** out_json) {
  return guarded([&] {
    require(instance != nullptr && out_json != nullptr, "null argument");
    const auto start = std::chrono::steady_clock::now();
    const auto det = ml_bruteforce(instance->value, max_enum);
    json doc = detection_json(det, instance->value);
    doc["enumerated"] = enumeration_size(instance->value.n, instance->value.constellation.M);
    doc["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    put_json(out_json, doc);
  });
}

psk_status psk_sweep(const char* config_json, const char* csv_path, const char* timing_path,
                     const char* plotdata_path, psk_progress_fn progress, void* user, char** out_json) {
  return guarded([&] {
    SweepConfig config;
    if (config_json && *config_json) {
      json doc;
      try {
        doc = json::parse(config_json);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_parameter, std::string("sweep config JSON: ") + e.what());
      }
      config = config_from_json(doc);
    }
    ProgressFn fn;
    if (progress) {
      fn = [&](const TrialRecord& rec) { progress(record_to_json(rec).dump().c_str(), user); };
    }
    const auto result = run_sweep(config, fn);
    const std::string records_path = csv_path ? csv_path : config.output_path;
    if (!records_path.empty()) emit_csv(result.records, records_path);
    if (timing_path) emit_timing_csv(result.records, timing_path);
    if (plotdata_path) emit_plotdata(result.records, plotdata_path);
    if (out_json) {
      json doc;
      doc["config"] = config_to_json(config);
      doc["records"] = result.records.size();
      json rows = json::array();
      for (const auto& s : result.summary) rows.push_back(summary_json(s));
      doc["summary"] = rows;
      doc["log"] = result.log;
      put_json(out_json, doc);
    }
  });
}

}  // extern "C"
