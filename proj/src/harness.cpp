#include "psksdr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "psksdr/detection.hpp"
#include "psksdr/equivalence.hpp"
#include "psksdr/error.hpp"
#include "psksdr/rng.hpp"

namespace psksdr {

namespace {

constexpr std::array<Relaxation, kModelCount> kAllModels{Relaxation::rsdr, Relaxation::ersdr1, Relaxation::ersdr2};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(ErrorCode::io, "not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw Error(ErrorCode::io, "not an integer: '" + s + "'");
  return v;
}

std::string records_header() {
  std::string h = "snr_index,snr_db,trial_index,seed";
  for (auto model : kAllModels) {
    const std::string p = to_string(model);
    h += "," + p + "_status," + p + "_objective," + p + "_iterations," + p + "_ser," + p + "_rank1_ratio";
  }
  h += ",eq_ran,eq_obj_diff,eq_obj_rel_diff,eq_Y_residual,eq_y_residual,eq_pass";
  h += ",tight_margin,tight_holds,ml_ran,ml_objective,ml_ser";
  return h;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

void SweepConfig::validate() const {
  if (m < 1 || n < 1) throw Error(ErrorCode::invalid_parameter, "sweep: m and n must be positive");
  if (m < n) throw Error(ErrorCode::invalid_parameter, "sweep: m must be at least n");
  if (M < 2) throw Error(ErrorCode::invalid_parameter, "sweep: M must be at least 2");
  if (snr_grid_db.empty()) throw Error(ErrorCode::invalid_parameter, "sweep: snr grid is empty");
  for (double s : snr_grid_db) {
    if (std::isnan(s) || (std::isinf(s) && s < 0)) throw Error(ErrorCode::invalid_parameter, "sweep: bad snr value");
  }
  if (trials < 1) throw Error(ErrorCode::invalid_parameter, "sweep: trials must be at least 1");
  if (models.empty()) throw Error(ErrorCode::invalid_parameter, "sweep: no models selected");
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_parameter, "sweep: tol must be positive");
  if (workers < 1) throw Error(ErrorCode::invalid_parameter, "sweep: workers must be at least 1");
  if (!(equivalence_tol > 0.0)) throw Error(ErrorCode::invalid_parameter, "sweep: equivalence_tol must be positive");
}

bool SweepConfig::has(Relaxation model) const {
  return std::find(models.begin(), models.end(), model) != models.end();
}

SweepConfig full_protocol() {
  SweepConfig c;
  c.trials = 100;
  return c;
}

nlohmann::json config_to_json(const SweepConfig& c) {
  nlohmann::json doc;
  doc["m"] = c.m;
  doc["n"] = c.n;
  doc["M"] = c.M;
  doc["snr_grid_db"] = c.snr_grid_db;
  doc["trials"] = c.trials;
  doc["base_seed"] = c.base_seed;
  std::vector<std::string> names;
  for (auto model : c.models) names.emplace_back(to_string(model));
  doc["models"] = names;
  doc["tol"] = c.tol;
  doc["workers"] = c.workers;
  doc["output_path"] = c.output_path;
  doc["equivalence_tol"] = c.equivalence_tol;
  doc["ml_max_enum"] = c.ml_max_enum;
  return doc;
}

SweepConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::invalid_parameter, "sweep config must be a JSON object");
  SweepConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "m") c.m = value.get<int>();
      else if (key == "n") c.n = value.get<int>();
      else if (key == "M") c.M = value.get<int>();
      else if (key == "snr_grid_db") c.snr_grid_db = value.get<std::vector<double>>();
      else if (key == "trials") c.trials = value.get<int>();
      else if (key == "base_seed") c.base_seed = value.get<std::uint64_t>();
      else if (key == "models") {
        c.models.clear();
        for (const auto& name : value) c.models.push_back(relaxation_from_string(name.get<std::string>()));
      } else if (key == "tol") c.tol = value.get<double>();
      else if (key == "workers") c.workers = value.get<int>();
      else if (key == "output_path") c.output_path = value.get<std::string>();
      else if (key == "equivalence_tol") c.equivalence_tol = value.get<double>();
      else if (key == "ml_max_enum") c.ml_max_enum = value.get<std::uint64_t>();
      else throw Error(ErrorCode::invalid_parameter, "unknown sweep config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_parameter, std::string("sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

int effective_workers(const SweepConfig& config) {
  int workers = config.workers;
  if (const char* env = std::getenv("PSKSDR_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw Error(ErrorCode::invalid_parameter, "PSKSDR_WORKERS must be a positive integer");
    workers = static_cast<int>(v);
  }
  return std::max(1, workers);
}

TrialRecord run_trial(const SweepConfig& config, int snr_index, int trial_index) {
  TrialRecord rec;
  rec.snr_index = snr_index;
  rec.snr_db = config.snr_grid_db.at(static_cast<std::size_t>(snr_index));
  rec.trial_index = trial_index;
  rec.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(snr_index), static_cast<std::uint64_t>(trial_index));

  const MimoInstance inst = sample_instance(config.m, config.n, config.M, rec.snr_db, rec.seed);
  const RealifiedData data = realify(inst);
  SolverSettings settings;
  settings.tol = config.tol;

  std::array<SdpSolution, kModelCount> solutions;
  for (auto model : kAllModels) {
    if (!config.has(model)) continue;
    auto& out = rec.outcome(model);
    out.ran = true;
    try {
      auto det = detect(inst, model, settings);
      out.objective = det.relaxation_objective;
      out.solve_seconds = det.solve_seconds;
      out.iterations = det.solution.iterations;
      out.status = to_string(det.solution.status);
      out.ser = symbol_error_rate(det.detection.x_index, inst.x_index);
      out.rank1_ratio = det.detection.rank1_ratio;
      solutions[static_cast<int>(model)] = std::move(det.solution);
    } catch (const std::exception& e) {
      out.status = "error";
      out.error = e.what();
    }
  }

  const auto& o1 = rec.outcome(Relaxation::ersdr1);
  const auto& o2 = rec.outcome(Relaxation::ersdr2);
  if (o1.ran && o2.ran && o1.status != "error" && o2.status != "error") {
    const auto p1 = extract_ersdr1(solutions[static_cast<int>(Relaxation::ersdr1)], config.n, config.M);
    const auto p2 = extract_ersdr2(solutions[static_cast<int>(Relaxation::ersdr2)], config.n, config.M);
    const auto rep = verify_equivalence(p1, p2, data, config.equivalence_tol);
    rec.equivalence_ran = true;
    rec.eq_obj_diff = rep.obj_abs_diff;
    rec.eq_obj_rel_diff = rep.obj_rel_diff;
    rec.eq_Y_residual = rep.connection_Y_residual;
    rec.eq_y_residual = rep.connection_y_residual;
    rec.eq_pass = rep.pass;
  }

  const auto tight = tightness_condition(inst);
  rec.tight_margin = tight.margin;
  rec.tight_holds = tight.holds;

  if (enumeration_size(config.n, config.M) <= config.ml_max_enum) {
    const auto ml = ml_bruteforce(inst, config.ml_max_enum);
    rec.ml_ran = true;
    rec.ml_objective = ml.objective;
    rec.ml_ser = symbol_error_rate(ml.x_index, inst.x_index);
  }
  return rec;
}

SweepResult run_sweep(const SweepConfig& config, const ProgressFn& progress) {
  config.validate();
  const int snrs = static_cast<int>(config.snr_grid_db.size());
  const int total = snrs * config.trials;
  const int workers = std::min(effective_workers(config), total);

  SweepResult result;
  result.records.resize(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::mutex progress_mutex;
  auto work = [&] {
    for (int job = next++; job < total; job = next++) {
      TrialRecord rec = run_trial(config, job / config.trials, job % config.trials);
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(rec);
      }
      result.records[static_cast<std::size_t>(job)] = std::move(rec);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::sort(result.records.begin(), result.records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.snr_index, a.trial_index) < std::tie(b.snr_index, b.trial_index);
  });

  for (const auto& rec : result.records) {
    for (auto model : kAllModels) {
      const auto& o = rec.outcome(model);
      if (o.ran && o.status == "error") {
        result.log.push_back("snr " + num(rec.snr_db) + " trial " + std::to_string(rec.trial_index) + " " +
                             to_string(model) + ": " + o.error);
      }
    }
    if (rec.equivalence_ran && !rec.eq_pass) {
      result.log.push_back("snr " + num(rec.snr_db) + " trial " + std::to_string(rec.trial_index) +
                           " seed " + std::to_string(rec.seed) + ": equivalence failed at tol " +
                           num(config.equivalence_tol) + " obj_diff=" + num(rec.eq_obj_diff) +
                           " obj_rel_diff=" + num(rec.eq_obj_rel_diff) + " Y_residual=" + num(rec.eq_Y_residual) +
                           " y_residual=" + num(rec.eq_y_residual) + " ersdr1_status=" +
                           rec.outcome(Relaxation::ersdr1).status + " ersdr2_status=" +
                           rec.outcome(Relaxation::ersdr2).status);
    }
  }
  result.summary = summarize(result.records);
  return result;
}

std::vector<SnrSummary> summarize(const std::vector<TrialRecord>& records) {
  std::vector<SnrSummary> out;
  std::size_t begin = 0;
  while (begin < records.size()) {
    std::size_t end = begin;
    while (end < records.size() && records[end].snr_index == records[begin].snr_index) ++end;
    SnrSummary s;
    s.snr_db = records[begin].snr_db;
    s.trials = static_cast<int>(end - begin);
    for (int k = 0; k < kModelCount; ++k) {
      std::vector<double> obj, sec, ser;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& o = records[i].models[static_cast<std::size_t>(k)];
        if (!o.ran || o.status == "error") continue;
        obj.push_back(o.objective);
        sec.push_back(o.solve_seconds);
        ser.push_back(o.ser);
        if (o.status == "Optimal") ++s.optimal[static_cast<std::size_t>(k)];
      }
      s.mean_objective[static_cast<std::size_t>(k)] = mean_of(obj);
      s.mean_seconds[static_cast<std::size_t>(k)] = mean_of(sec);
      s.mean_ser[static_cast<std::size_t>(k)] = mean_of(ser);
    }
    std::vector<double> d, rd, Y, y, pass, tight;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = records[i];
      tight.push_back(r.tight_holds ? 1.0 : 0.0);
      if (!r.equivalence_ran) continue;
      d.push_back(r.eq_obj_diff);
      rd.push_back(r.eq_obj_rel_diff);
      Y.push_back(r.eq_Y_residual);
      y.push_back(r.eq_y_residual);
      pass.push_back(r.eq_pass ? 1.0 : 0.0);
    }
    s.mean_obj_diff = mean_of(d);
    s.mean_obj_rel_diff = mean_of(rd);
    s.mean_Y_residual = mean_of(Y);
    s.mean_y_residual = mean_of(y);
    s.eq_pass_fraction = mean_of(pass);
    s.tight_fraction = mean_of(tight);
    out.push_back(s);
    begin = end;
  }
  return out;
}

std::string records_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << records_header() << '\n';
  for (const auto& r : records) {
    os << r.snr_index << ',' << num(r.snr_db) << ',' << r.trial_index << ',' << r.seed;
    for (const auto& o : r.models) {
      os << ',' << o.status << ',' << num(o.objective) << ',' << o.iterations << ',' << num(o.ser) << ','
         << num(o.rank1_ratio);
    }
    os << ',' << int(r.equivalence_ran) << ',' << num(r.eq_obj_diff) << ',' << num(r.eq_obj_rel_diff) << ','
       << num(r.eq_Y_residual) << ',' << num(r.eq_y_residual) << ',' << int(r.eq_pass);
    os << ',' << num(r.tight_margin) << ',' << int(r.tight_holds) << ',' << int(r.ml_ran) << ','
       << num(r.ml_objective) << ',' << num(r.ml_ser) << '\n';
  }
  return os.str();
}

std::vector<TrialRecord> parse_records_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::io, "records csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != records_header()) throw Error(ErrorCode::io, "records csv: unexpected header");
  const std::size_t columns = split(records_header(), ',').size();
  std::vector<TrialRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != columns) throw Error(ErrorCode::io, "records csv: wrong column count");
    TrialRecord r;
    std::size_t c = 0;
    r.snr_index = static_cast<int>(parse_u64(f[c++]));
    r.snr_db = parse_double(f[c++]);
    r.trial_index = static_cast<int>(parse_u64(f[c++]));
    r.seed = parse_u64(f[c++]);
    for (auto& o : r.models) {
      o.status = f[c++];
      o.ran = o.status != "skipped";
      o.objective = parse_double(f[c++]);
      o.iterations = static_cast<int>(parse_u64(f[c++]));
      o.ser = parse_double(f[c++]);
      o.rank1_ratio = parse_double(f[c++]);
    }
    r.equivalence_ran = parse_u64(f[c++]) != 0;
    r.eq_obj_diff = parse_double(f[c++]);
    r.eq_obj_rel_diff = parse_double(f[c++]);
    r.eq_Y_residual = parse_double(f[c++]);
    r.eq_y_residual = parse_double(f[c++]);
    r.eq_pass = parse_u64(f[c++]) != 0;
    r.tight_margin = parse_double(f[c++]);
    r.tight_holds = parse_u64(f[c++]) != 0;
    r.ml_ran = parse_u64(f[c++]) != 0;
    r.ml_objective = parse_double(f[c++]);
    r.ml_ser = parse_double(f[c++]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string timing_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << "snr_db,trial_index,seed";
  for (auto model : kAllModels) os << ',' << to_string(model) << "_seconds";
  os << '\n';
  for (const auto& r : records) {
    os << num(r.snr_db) << ',' << r.trial_index << ',' << r.seed;
    for (const auto& o : r.models) os << ',' << num(o.ran ? o.solve_seconds : std::nan(""));
    os << '\n';
  }
  return os.str();
}

std::string plotdata_csv(const std::vector<SnrSummary>& summary) {
  std::ostringstream os;
  os << "snr_db,trials,mean_obj_diff,mean_obj_rel_diff,mean_Y_residual,mean_y_residual,eq_pass_fraction,"
        "tight_fraction";
  for (auto model : kAllModels) {
    const std::string p = to_string(model);
    os << ',' << p << "_mean_objective," << p << "_mean_seconds," << p << "_mean_ser," << p << "_optimal";
  }
  os << '\n';
  for (const auto& s : summary) {
    os << num(s.snr_db) << ',' << s.trials << ',' << num(s.mean_obj_diff) << ',' << num(s.mean_obj_rel_diff) << ','
       << num(s.mean_Y_residual) << ',' << num(s.mean_y_residual) << ',' << num(s.eq_pass_fraction) << ','
       << num(s.tight_fraction);
    for (std::size_t k = 0; k < kModelCount; ++k) {
      os << ',' << num(s.mean_objective[k]) << ',' << num(s.mean_seconds[k]) << ',' << num(s.mean_ser[k]) << ','
         << s.optimal[k];
    }
    os << '\n';
  }
  return os.str();
}

void emit_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  if (records.empty()) throw Error(ErrorCode::invalid_parameter, "emit_csv: no records");
  write_file(path, records_csv(records));
}

void emit_timing_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  if (records.empty()) throw Error(ErrorCode::invalid_parameter, "emit_timing_csv: no records");
  write_file(path, timing_csv(records));
}

void emit_plotdata(const std::vector<TrialRecord>& records, const std::string& path) {
  if (records.empty()) throw Error(ErrorCode::invalid_parameter, "emit_plotdata: no records");
  write_file(path, plotdata_csv(summarize(records)));
}

nlohmann::json record_to_json(const TrialRecord& r) {
  nlohmann::json doc;
  doc["snr_db"] = r.snr_db;
  doc["trial_index"] = r.trial_index;
  doc["seed"] = r.seed;
  for (auto model : kAllModels) {
    const auto& o = r.outcome(model);
    if (!o.ran) continue;
    nlohmann::json m;
    m["status"] = o.status;
    m["objective"] = o.objective;
    m["solve_time_seconds"] = o.solve_seconds;
    m["iterations"] = o.iterations;
    m["ser"] = o.ser;
    m["rank1_ratio"] = o.rank1_ratio;
    if (!o.error.empty()) m["error"] = o.error;
    doc[to_string(model)] = m;
  }
  if (r.equivalence_ran) {
    doc["equivalence"] = {{"obj_diff", r.eq_obj_diff},
                          {"obj_rel_diff", r.eq_obj_rel_diff},
                          {"connection_Y_residual", r.eq_Y_residual},
                          {"connection_y_residual", r.eq_y_residual},
                          {"pass", r.eq_pass}};
  }
  doc["tightness"] = {{"margin", r.tight_margin}, {"holds", r.tight_holds}};
  if (r.ml_ran) doc["ml"] = {{"objective", r.ml_objective}, {"ser", r.ml_ser}};
  return doc;
}

}  // namespace psksdr
