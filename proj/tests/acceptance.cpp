// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Arguments select criteria (AC1..AC7);
// no arguments runs all of them.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "psksdr/detection.hpp"
#include "psksdr/equivalence.hpp"
#include "psksdr/harness.hpp"
#include "psksdr/model.hpp"
#include "psksdr/relaxations.hpp"
#include "psksdr/rng.hpp"
#include "psksdr/sdp.hpp"
#include "support.hpp"

using namespace psksdr;
using namespace psksdr::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

// AC1 and AC5 share one sweep at (10, 10, 8).
const SweepResult& reference_sweep() {
  static const SweepResult result = [] {
    SweepConfig c;
    c.models = {Relaxation::ersdr1, Relaxation::ersdr2};
    c.trials = 5;
    return run_sweep(c);
  }();
  return result;
}

Verdict ac1() {
  const auto& res = reference_sweep();
  double obj = 0.0, Y = 0.0, y = 0.0;
  int count = 0, errors = 0;
  for (const auto& r : res.records) {
    if (!r.equivalence_ran) {
      ++errors;
      continue;
    }
    obj += r.eq_obj_rel_diff;
    Y += r.eq_Y_residual;
    y += r.eq_y_residual;
    ++count;
  }
  if (count == 0) return {false, "no trial produced both solutions"};
  obj /= count;
  Y /= count;
  y /= count;
  const bool pass = errors == 0 && count >= 20 && obj <= 5e-4 && Y <= 5e-3 && y <= 5e-3;
  return {pass, std::to_string(count) + " trials, mean rel obj diff " + fmt("%.3e", obj) + " (<= 5e-4), mean ||S T S^T - Y|| " +
                    fmt("%.3e", Y) + " (<= 5e-3), mean ||S t - y|| " + fmt("%.3e", y) + " (<= 5e-3)" +
                    (errors ? ", " + std::to_string(errors) + " trials missing a solution" : "")};
}

Verdict ac2() {
  int total = 0, failures = 0;
  double worst_feas = 0.0, worst_conn = 0.0, worst_obj = 0.0;
  const std::pair<int, int> sizes[] = {{2, 4}, {3, 4}, {2, 8}};
  for (std::size_t s = 0; s < 3; ++s) {
    const auto [n, M] = sizes[s];
    const int count = s < 2 ? 33 : 34;
    for (int k = 0; k < count; ++k) {
      const auto seed = derive_seed(20170305, s, static_cast<std::uint64_t>(k));
      const auto data = realify(sample_instance(n + 1, n, M, 10.0, seed));
      CounterRng rng(derive_seed(seed, 99));
      const int parts = 3 + static_cast<int>(rng.below(6));
      const auto p1 = random_ersdr1_point(data, rng, parts);
      ++total;
      try {
        const auto built = construct_T(p1, data);
        const double feas = check_ersdr2(built.point, data).worst();
        const auto rep = verify_equivalence(p1, built.point, data, 1e-7);
        const double conn = std::max(rep.connection_Y_residual, rep.connection_y_residual);
        worst_feas = std::max(worst_feas, feas);
        worst_conn = std::max(worst_conn, conn);
        worst_obj = std::max(worst_obj, rep.obj_rel_diff);
        if (feas > 1e-7 || conn > 1e-7 || rep.obj_rel_diff > 1e-9) ++failures;
      } catch (const std::exception& e) {
        ++failures;
        std::fprintf(stderr, "AC2 point %d (n=%d, M=%d): %s\n", k, n, M, e.what());
      }
    }
  }
  return {failures == 0, std::to_string(total - failures) + "/" + std::to_string(total) +
                             " points pass; worst invariant violation " + fmt("%.2e", worst_feas) +
                             " (<= 1e-7), worst connection residual " + fmt("%.2e", worst_conn) +
                             " (<= 1e-7), worst rel objective gap " + fmt("%.2e", worst_obj) + " (<= 1e-9)"};
}

Verdict ac3() {
  // The condition almost never holds for (10, 10) at 30 dB; 60 dB gives a
  // usable hit rate. Report the 30 dB rate for reference.
  int hits30 = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    if (tightness_condition(sample_instance(10, 10, 8, 30.0, derive_seed(3030, k))).holds) ++hits30;
  }
  const double snr = 60.0;
  int scanned = 0, found = 0, bad = 0;
  double worst_ratio = 0.0, worst_gap = 0.0;
  for (std::uint64_t k = 0; found < 20 && k < 2000; ++k) {
    const auto inst = sample_instance(10, 10, 8, snr, derive_seed(6060, k));
    ++scanned;
    if (!tightness_condition(inst).holds) continue;
    ++found;
    const auto r = detect(inst, Relaxation::ersdr2);
    const double truth = objective_q(inst.x_star, realify(inst));
    const double gap = std::abs(r.relaxation_objective - truth) / (1.0 + std::abs(truth));
    worst_ratio = std::max(worst_ratio, r.detection.rank1_ratio);
    worst_gap = std::max(worst_gap, gap);
    const bool ok = r.solution.status == SolveStatus::optimal && r.detection.rank1_ratio <= 1e-6 &&
                    r.detection.x_index == inst.x_index && gap <= 1e-6;
    if (!ok) {
      ++bad;
      std::fprintf(stderr, "AC3 instance %llu: status %s rank1 %.3e gap %.3e x_hat %s x*\n",
                   static_cast<unsigned long long>(k), to_string(r.solution.status), r.detection.rank1_ratio, gap,
                   r.detection.x_index == inst.x_index ? "=" : "!=");
    }
  }
  return {found == 20 && bad == 0,
          std::to_string(found) + " instances satisfying the condition at " + fmt("%.0f", snr) + " dB (of " +
              std::to_string(scanned) + " scanned; " + std::to_string(hits30) + "/200 at 30 dB), " +
              std::to_string(found - bad) + " tight; worst rank1_ratio " + fmt("%.2e", worst_ratio) +
              " (<= 1e-6), worst rel objective gap to x* " + fmt("%.2e", worst_gap) + " (<= 1e-6)"};
}

Verdict ac4() {
  int violations = 0;
  double worst = -1e300;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const double snr = 5.0 * static_cast<double>(1 + k % 4);
    const auto inst = sample_instance(3, 3, 4, snr, derive_seed(4040, k));
    const auto data = realify(inst);
    const auto s0 = solve(build_rsdr(data));
    const auto s1 = solve(build_ersdr1(data));
    const double ml = ml_bruteforce(inst).objective;
    const double a = s0.primal_obj - s1.primal_obj - 1e-7 * (1.0 + std::abs(s1.primal_obj));
    const double b = s1.primal_obj - ml - 1e-7 * (1.0 + std::abs(ml));
    worst = std::max({worst, a, b});
    if (a > 0 || b > 0 || s0.status != SolveStatus::optimal || s1.status != SolveStatus::optimal) ++violations;
  }
  return {violations == 0, std::to_string(50 - violations) +
                               "/50 instances satisfy rsdr <= ersdr1 <= ml; largest excess over the 1e-7 allowance " +
                               fmt("%.2e", worst) + " (<= 0)"};
}

Verdict ac5() {
  const auto& res = reference_sweep();
  std::vector<double> t1, t2;
  for (const auto& r : res.records) {
    const auto& o1 = r.outcome(Relaxation::ersdr1);
    const auto& o2 = r.outcome(Relaxation::ersdr2);
    if (o1.status != "error") t1.push_back(o1.solve_seconds);
    if (o2.status != "error") t2.push_back(o2.solve_seconds);
  }
  if (t1.size() < 20 || t2.size() < 20) return {false, "fewer than 20 timed trials"};
  const double m1 = median(t1), m2 = median(t2);
  return {m1 < m2, std::to_string(t1.size()) + " trials, median solve time ersdr1 " + fmt("%.4f", m1) +
                       " s < ersdr2 " + fmt("%.4f", m2) + " s"};
}

Verdict ac6() {
  struct Case {
    const char* name;
    ConicProgram program;
    double optimum;
  };
  std::vector<Case> cases;
  cases.push_back({"min X11 s.t. X11+X22=2", trace_pinned_program(), 0.0});
  cases.push_back({"min tr X s.t. X12=1", offdiag_pinned_program(), 2.0});
  const int n = 4;
  cases.push_back({"rsdr on noiseless H=I", build_rsdr(realify(identity_channel_instance(n, 8, 1))), -n});
  bool pass = true;
  double worst_err = 0.0, worst_dual = -1e300;
  int iterates = 0;
  for (const auto& c : cases) {
    const auto sol = solve(c.program);
    const double err = std::abs(sol.primal_obj - c.optimum);
    worst_err = std::max(worst_err, err);
    if (sol.status != SolveStatus::optimal || err > 1e-8) {
      pass = false;
      std::fprintf(stderr, "AC6 %s: status %s objective %.12g\n", c.name, to_string(sol.status), sol.primal_obj);
    }
    for (const auto& it : sol.log) {
      ++iterates;
      const double excess = it.dual_obj - it.primal_obj - 1e-7 * (1.0 + std::abs(it.primal_obj));
      worst_dual = std::max(worst_dual, excess);
      if (excess > 0) pass = false;
    }
  }
  return {pass, "3 analytic programs, worst |objective - optimum| " + fmt("%.2e", worst_err) +
                    " (<= 1e-8); weak duality on " + std::to_string(iterates) +
                    " logged iterates, largest excess " + fmt("%.2e", worst_dual) + " (<= 0)"};
}

Verdict ac7() {
  SweepConfig c;
  c.m = 4;
  c.n = 3;
  c.M = 4;
  c.snr_grid_db = {5.0, 10.0, 15.0, 20.0};
  c.trials = 3;
  c.base_seed = 777;
  const std::string a = records_csv(run_sweep(c).records);
  const std::string b = records_csv(run_sweep(c).records);
  c.workers = 2;
  const std::string p = records_csv(run_sweep(c).records);
  return {a == b && a == p, std::to_string(a.size()) + " CSV bytes; repeat run " +
                                (a == b ? "identical" : "differs") + ", two-worker run " +
                                (a == p ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s %s [%.1f s]\n", name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed ? 1 : 0;
}
