#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "psksdr/error.hpp"
#include "psksdr/harness.hpp"
#include "psksdr/rng.hpp"

using namespace psksdr;

namespace {

SweepConfig small_config() {
  SweepConfig c;
  c.m = 3;
  c.n = 2;
  c.M = 4;
  c.snr_grid_db = {5.0, 15.0};
  c.trials = 3;
  c.base_seed = 11;
  return c;
}

int count_lines(const std::string& text) {
  int k = 0;
  for (char ch : text)
    if (ch == '\n') ++k;
  return k;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

TEST_CASE("sweep records and csv layout") {
  const auto cfg = small_config();
  int seen = 0;
  const auto result = run_sweep(cfg, [&](const TrialRecord&) { ++seen; });
  CHECK(seen == 6);
  REQUIRE(result.records.size() == 6);
  for (std::size_t k = 0; k < result.records.size(); ++k) {
    const auto& r = result.records[k];
    CHECK(r.snr_index == static_cast<int>(k / 3));
    CHECK(r.trial_index == static_cast<int>(k % 3));
    CHECK(r.seed == derive_seed(cfg.base_seed, static_cast<std::uint64_t>(r.snr_index),
                                static_cast<std::uint64_t>(r.trial_index)));
    for (const auto& o : r.models) {
      CHECK(o.ran);
      CHECK(o.status == "Optimal");
      CHECK(o.solve_seconds >= 0.0);
    }
    CHECK(r.equivalence_ran);
    CHECK(r.eq_pass);
    CHECK(r.ml_ran);
    CHECK(r.outcome(Relaxation::ersdr1).objective <= r.ml_objective + 1e-7 * (1 + std::abs(r.ml_objective)));
  }
  CHECK(result.log.empty());

  const auto csv = records_csv(result.records);
  CHECK(count_lines(csv) == 7);
  CHECK(csv.rfind("snr_index,snr_db,trial_index,seed,rsdr_status", 0) == 0);
  CHECK(count_lines(timing_csv(result.records)) == 7);
  CHECK(count_lines(plotdata_csv(result.summary)) == 3);

  REQUIRE(result.summary.size() == 2);
  double mean = 0.0;
  for (int k = 0; k < 3; ++k) mean += result.records[k].outcome(Relaxation::ersdr2).objective;
  CHECK(result.summary[0].mean_objective[2] == doctest::Approx(mean / 3).epsilon(1e-15));
  CHECK(result.summary[0].trials == 3);
  CHECK(result.summary[0].optimal[1] == 3);
  CHECK(result.summary[0].eq_pass_fraction == 1.0);
}

TEST_CASE("csv parses back to the same numbers") {
  const auto result = run_sweep(small_config());
  const auto parsed = parse_records_csv(records_csv(result.records));
  REQUIRE(parsed.size() == result.records.size());
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    const auto& a = result.records[k];
    const auto& b = parsed[k];
    CHECK(a.seed == b.seed);
    CHECK(a.snr_db == b.snr_db);
    for (int m = 0; m < kModelCount; ++m) {
      CHECK(a.models[m].status == b.models[m].status);
      CHECK(same(a.models[m].objective, b.models[m].objective));
      CHECK(a.models[m].iterations == b.models[m].iterations);
      CHECK(same(a.models[m].ser, b.models[m].ser));
      CHECK(same(a.models[m].rank1_ratio, b.models[m].rank1_ratio));
    }
    CHECK(same(a.eq_obj_diff, b.eq_obj_diff));
    CHECK(same(a.eq_obj_rel_diff, b.eq_obj_rel_diff));
    CHECK(same(a.eq_Y_residual, b.eq_Y_residual));
    CHECK(same(a.eq_y_residual, b.eq_y_residual));
    CHECK(a.eq_pass == b.eq_pass);
    CHECK(same(a.tight_margin, b.tight_margin));
    CHECK(a.tight_holds == b.tight_holds);
    CHECK(same(a.ml_objective, b.ml_objective));
  }
  // Emitting the parsed records reproduces the bytes.
  CHECK(records_csv(parsed) == records_csv(result.records));
  CHECK_THROWS_AS(parse_records_csv(""), Error);
  CHECK_THROWS_AS(parse_records_csv("a,b\n1,2\n"), Error);
}

TEST_CASE("emit refuses empty input and writes nothing") {
  const std::string path = "test_harness_empty.csv";
  std::remove(path.c_str());
  CHECK_THROWS_AS(emit_csv({}, path), Error);
  CHECK_THROWS_AS(emit_timing_csv({}, path), Error);
  CHECK_THROWS_AS(emit_plotdata({}, path), Error);
  CHECK_FALSE(exists(path));

  const auto result = run_sweep(small_config());
  CHECK_THROWS_AS(emit_csv(result.records, "/nonexistent/dir/out.csv"), Error);
  emit_csv(result.records, path);
  CHECK(slurp(path) == records_csv(result.records));
  std::remove(path.c_str());
}

TEST_CASE("sweep is deterministic across runs and worker counts") {
  auto cfg = small_config();
  cfg.trials = 1;
  const auto a = records_csv(run_sweep(cfg).records);
  const auto b = records_csv(run_sweep(cfg).records);
  CHECK(a == b);
  cfg.trials = 3;
  cfg.workers = 1;
  const auto serial = records_csv(run_sweep(cfg).records);
  cfg.workers = 3;
  const auto parallel = records_csv(run_sweep(cfg).records);
  CHECK(serial == parallel);
  cfg.base_seed += 1;
  CHECK(records_csv(run_sweep(cfg).records) != parallel);
}

TEST_CASE("model subsets") {
  auto cfg = small_config();
  cfg.models = {Relaxation::rsdr};
  cfg.snr_grid_db = {10.0};
  cfg.trials = 2;
  const auto result = run_sweep(cfg);
  for (const auto& r : result.records) {
    CHECK(r.outcome(Relaxation::rsdr).ran);
    CHECK_FALSE(r.outcome(Relaxation::ersdr1).ran);
    CHECK(r.outcome(Relaxation::ersdr2).status == "skipped");
    CHECK_FALSE(r.equivalence_ran);
  }
  CHECK(std::isnan(result.summary[0].mean_objective[1]));
  CHECK(std::isnan(result.summary[0].mean_Y_residual));
  const auto parsed = parse_records_csv(records_csv(result.records));
  CHECK_FALSE(parsed[0].outcome(Relaxation::ersdr2).ran);
}

TEST_CASE("config json") {
  auto cfg = small_config();
  cfg.models = {Relaxation::ersdr1, Relaxation::ersdr2};
  cfg.tol = 1e-7;
  const auto doc = config_to_json(cfg);
  const auto back = config_from_json(doc);
  CHECK(back.m == cfg.m);
  CHECK(back.n == cfg.n);
  CHECK(back.M == cfg.M);
  CHECK(back.snr_grid_db == cfg.snr_grid_db);
  CHECK(back.trials == cfg.trials);
  CHECK(back.base_seed == cfg.base_seed);
  CHECK(back.models == cfg.models);
  CHECK(back.tol == cfg.tol);
  CHECK(back.ml_max_enum == cfg.ml_max_enum);
  CHECK(config_to_json(back) == doc);

  const auto defaults = config_from_json(nlohmann::json::object());
  CHECK(defaults.m == 10);
  CHECK(defaults.n == 10);
  CHECK(defaults.M == 8);
  CHECK(defaults.snr_grid_db == std::vector<double>{5, 10, 15, 20});
  CHECK(full_protocol().trials == 100);

  CHECK_THROWS_AS(config_from_json({{"trails", 3}}), Error);
  CHECK_THROWS_AS(config_from_json({{"trials", 0}}), Error);
  CHECK_THROWS_AS(config_from_json({{"snr_grid_db", nlohmann::json::array()}}), Error);
  CHECK_THROWS_AS(config_from_json({{"models", {"qsdr"}}}), Error);
  CHECK_THROWS_AS(config_from_json({{"m", 2}, {"n", 3}}), Error);
  CHECK_THROWS_AS(config_from_json({{"trials", "many"}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), Error);
}

TEST_CASE("worker override from the environment") {
  SweepConfig cfg;
  cfg.workers = 2;
  unsetenv("PSKSDR_WORKERS");
  CHECK(effective_workers(cfg) == 2);
  setenv("PSKSDR_WORKERS", "4", 1);
  CHECK(effective_workers(cfg) == 4);
  setenv("PSKSDR_WORKERS", "zero", 1);
  CHECK_THROWS_AS(effective_workers(cfg), Error);
  unsetenv("PSKSDR_WORKERS");
}

TEST_CASE("record json") {
  const auto rec = run_trial(small_config(), 1, 2);
  const auto doc = record_to_json(rec);
  CHECK(doc["trial_index"] == 2);
  CHECK(doc["snr_db"] == 15.0);
  CHECK(doc.contains("equivalence"));
  CHECK(doc.contains("ml"));
}
