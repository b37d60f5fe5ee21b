#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "psksdr/error.hpp"
#include "psksdr/model.hpp"
#include "psksdr/relaxations.hpp"
#include "psksdr/sdp.hpp"
#include "support.hpp"

using namespace psksdr;
using namespace psksdr::testing;

namespace {

int count_prefix(const ConicProgram& p, const std::string& prefix) {
  int k = 0;
  for (const auto& c : p.constraints)
    if (c.label.rfind(prefix, 0) == 0) ++k;
  return k;
}

BlockValues ersdr1_values(const Ersdr1Point& p) {
  return {homogenize(p.y, p.Y), Eigen::MatrixXd(p.t)};
}

BlockValues ersdr2_values(const Ersdr2Point& p, bool with_nonneg) {
  BlockValues v{homogenize(p.t, p.T)};
  if (with_nonneg) v.push_back(Eigen::MatrixXd(p.t));
  return v;
}

double primal_residual(const ConicProgram& p, const BlockValues& X) {
  BlockValues Z;
  for (const auto& b : X) Z.push_back(Eigen::MatrixXd::Zero(b.rows(), b.cols()));
  return residuals(p, X, Eigen::VectorXd::Zero(static_cast<int>(p.constraints.size())), Z).primal;
}

SdpSolution fake_solution(BlockValues X) {
  SdpSolution s;
  s.X = std::move(X);
  s.status = SolveStatus::optimal;
  return s;
}

}  // namespace

TEST_CASE("constraint counts") {
  const auto d10 = realify(sample_instance(10, 10, 8, 10.0, 1));
  const auto rsdr = build_rsdr(d10);
  REQUIRE(rsdr.blocks.size() == 1);
  CHECK(rsdr.blocks[0].dim == 21);
  CHECK(rsdr.constraints.size() == 11);

  const auto e1 = build_ersdr1(d10);
  REQUIRE(e1.blocks.size() == 2);
  CHECK(e1.blocks[0].kind == ConeKind::psd);
  CHECK(e1.blocks[0].dim == 21);
  CHECK(e1.blocks[1].kind == ConeKind::nonneg);
  CHECK(e1.blocks[1].dim == 80);
  CHECK(e1.constraints.size() == 61);
  CHECK(count_prefix(e1, "lift") == 50);
  CHECK(count_prefix(e1, "assign") == 10);

  const auto e2 = build_ersdr2(d10);
  CHECK(e2.blocks[0].dim == 81);
  CHECK(e2.blocks[1].dim == 80);

  // n = 1, M = 2: corner + assignment + one zero + two diagonal links, plus
  // the links to the explicit t >= 0 copy.
  const auto d1 = realify(sample_instance(1, 1, 2, 10.0, 1));
  const auto small = build_ersdr2(d1);
  CHECK(small.blocks[0].dim == 3);
  CHECK(count_prefix(small, "corner") == 1);
  CHECK(count_prefix(small, "assign") == 1);
  CHECK(count_prefix(small, "offdiag") == 1);
  CHECK(count_prefix(small, "diag") == 2);
  CHECK(count_prefix(small, "link") == 2);
  CHECK(small.constraints.size() == 7);
  BuildOptions drop;
  drop.drop_redundant = true;
  const auto lean = build_ersdr2(d1, drop);
  CHECK(lean.blocks.size() == 1);
  CHECK(lean.constraints.size() == 5);

  for (int n : {1, 2, 3}) {
    for (int M : {2, 4, 8}) {
      const auto d = realify(sample_instance(n, n, M, 10.0, 3));
      const auto p = build_ersdr2(d);
      const int expect = 1 + n + n * M + n * M * (M - 1) / 2 + n * M;
      CHECK(static_cast<int>(p.constraints.size()) == expect);
      CHECK(static_cast<int>(build_ersdr1(d).constraints.size()) == 6 * n + 1);
      CHECK(static_cast<int>(build_rsdr(d).constraints.size()) == n + 1);
    }
  }
}

TEST_CASE("coefficient patterns") {
  const int n = 3, M = 4;
  const auto d = realify(sample_instance(4, n, M, 10.0, 12));
  for (auto model : {Relaxation::rsdr, Relaxation::ersdr1, Relaxation::ersdr2}) {
    const auto p = build_relaxation(model, d);
    CHECK_NOTHROW(p.validate());
    for (const auto& c : p.constraints) {
      for (const auto& e : c.coeffs.entries()) CHECK(e.row <= e.col);
    }
  }
  const auto e2 = build_ersdr2(d);
  for (const auto& c : e2.constraints) {
    const auto nnz = c.coeffs.entries().size();
    if (c.label.rfind("corner", 0) == 0) CHECK(nnz == 1);
    if (c.label.rfind("assign", 0) == 0) CHECK(nnz == M);
    if (c.label.rfind("offdiag", 0) == 0) CHECK(nnz == 1);
    if (c.label.rfind("diag", 0) == 0) CHECK(nnz == 2);
    if (c.label.rfind("link", 0) == 0) CHECK(nnz == 2);
  }
  const auto rsdr = build_rsdr(d);
  for (const auto& c : rsdr.constraints) {
    if (c.label.rfind("modulus", 0) == 0) CHECK(c.coeffs.entries().size() == 2);
  }
}

TEST_CASE("integral points are feasible and reproduce the objective") {
  for (int M : {2, 4, 8}) {
    const int n = 3;
    const auto inst = sample_instance(5, n, M, 10.0, 40 + M);
    const auto d = realify(inst);
    CounterRng rng(M);
    for (int trial = 0; trial < 5; ++trial) {
      const auto idx = random_integral_points(rng, n, M, 1)[0];
      const auto x = symbols_from_indices(idx, d.constellation);
      const auto p1 = integral_ersdr1(idx, d);
      const auto p2 = integral_ersdr2(idx, d);
      CHECK(check_ersdr1(p1, d).worst() <= 1e-14);
      CHECK(check_ersdr2(p2, d).worst() <= 1e-14);
      const double q = objective_q(x, d);
      CHECK(std::abs(objective_ersdr1(p1, d) - q) <= 1e-12 * (1 + std::abs(q)));
      CHECK(std::abs(objective_ersdr2(p2, d) - q) <= 1e-12 * (1 + std::abs(q)));
      CHECK(primal_residual(build_ersdr1(d), ersdr1_values(p1)) <= 1e-14);
      CHECK(primal_residual(build_ersdr2(d), ersdr2_values(p2, true)) <= 1e-14);
      Ersdr1Point r = p1;
      CHECK(primal_residual(build_rsdr(d), {homogenize(r.y, r.Y)}) <= 1e-14);
      CHECK(std::abs(inner(build_ersdr2(d).objective, ersdr2_values(p2, true)) - q) <= 1e-12 * (1 + std::abs(q)));
    }
  }
}

TEST_CASE("local blocks of feasible points are weighted sums of P_j") {
  const int n = 2, M = 8;
  const auto d = realify(sample_instance(3, n, M, 10.0, 5));
  CounterRng rng(3);
  const auto p = random_ersdr1_point(d, rng, 5);
  CHECK(check_ersdr1(p, d).worst() <= 1e-12);
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
    for (int j = 0; j < M; ++j) sum += p.t[t_index(i, j, M)] * d.P[j];
    CHECK((local_block(p, i) - sum).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("noiseless identity channel: all relaxations reach -n") {
  const int n = 3;
  for (int M : {2, 4, 8}) {
    const auto inst = identity_channel_instance(n, M, 7 * M);
    const auto d = realify(inst);
    for (auto model : {Relaxation::rsdr, Relaxation::ersdr1, Relaxation::ersdr2}) {
      INFO(to_string(model) << " M=" << M);
      const auto sol = solve(build_relaxation(model, d));
      REQUIRE(sol.status == SolveStatus::optimal);
      CHECK(std::abs(sol.primal_obj + n) <= 1e-7);
      const auto e = sym_eig(sol.X[0]);
      CHECK(e.values[1] <= 1e-6 * e.values[0]);
    }
  }
}

TEST_CASE("relaxation ordering and extraction on random instances") {
  const int n = 3, M = 4;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = sample_instance(3, n, M, 5.0 + 5.0 * static_cast<double>(seed % 4), seed);
    const auto d = realify(inst);
    const auto s0 = solve(build_rsdr(d));
    const auto s1 = solve(build_ersdr1(d));
    REQUIRE(s0.status == SolveStatus::optimal);
    REQUIRE(s1.status == SolveStatus::optimal);
    const double o0 = s0.primal_obj, o1 = s1.primal_obj;
    CHECK(o0 <= o1 + 1e-7 * (1 + std::abs(o1)));
    const double truth = objective_q(inst.x_star, d);
    CHECK(o1 <= truth + 1e-7 * (1 + std::abs(truth)));

    const auto p1 = extract_ersdr1(s1, n, M);
    CHECK(check_ersdr1(p1, d).passes(1e-7));
    CHECK(std::abs(objective_ersdr1(p1, d) - o1) <= 1e-7 * (1 + std::abs(o1)));
    if (seed < 10) {
      const auto s2 = solve(build_ersdr2(d));
      REQUIRE(s2.status == SolveStatus::optimal);
      const auto p2 = extract_ersdr2(s2, n, M);
      CHECK(check_ersdr2(p2, d).passes(1e-7));
      CHECK(std::abs(s2.primal_obj - o1) <= 1e-6 * (1 + std::abs(o1)));
    }
  }
}

TEST_CASE("dropping the redundant cone keeps the optimum") {
  const auto d = realify(sample_instance(4, 3, 4, 10.0, 21));
  BuildOptions drop;
  drop.drop_redundant = true;
  const auto a = solve(build_ersdr2(d));
  const auto b = solve(build_ersdr2(d, drop));
  REQUIRE(a.status == SolveStatus::optimal);
  REQUIRE(b.status == SolveStatus::optimal);
  CHECK(std::abs(a.primal_obj - b.primal_obj) <= 1e-7 * (1 + std::abs(a.primal_obj)));
}

TEST_CASE("extraction") {
  const int n = 2, M = 4;
  const auto d = realify(sample_instance(2, n, M, 10.0, 6));
  const std::vector<int> idx{1, 3};
  const auto p1 = integral_ersdr1(idx, d);
  const auto back1 = extract_ersdr1(fake_solution(ersdr1_values(p1)), n, M);
  CHECK(back1.y == p1.y);
  CHECK(back1.Y == p1.Y);
  CHECK(back1.t == p1.t);

  const auto p2 = integral_ersdr2(idx, d);
  const auto back2 = extract_ersdr2(fake_solution(ersdr2_values(p2, true)), n, M);
  CHECK(back2.t == p2.t);
  CHECK(back2.T == p2.T);

  auto shifted = ersdr2_values(p2, true);
  shifted[0](0, 0) = 1.0 + 1e-3;
  CHECK_THROWS_AS(extract_ersdr2(fake_solution(shifted), n, M), Error);
  CHECK_THROWS_AS(extract_ersdr2(fake_solution(ersdr2_values(p2, true)), n, 8), Error);
  CHECK_THROWS_AS(extract_ersdr1(fake_solution({homogenize(p1.y, p1.Y)}), n, M), Error);

  // Violations are reported, not repaired.
  auto broken = p2;
  broken.T(0, 1) = 0.25;
  broken.T(1, 0) = 0.25;
  const auto rep = check_ersdr2(broken, d);
  CHECK(rep.violations.at("diagonal_blocks") == doctest::Approx(0.25));
  CHECK_FALSE(rep.passes(1e-7));
  CHECK(rep.describe().find("diagonal_blocks") != std::string::npos);
}

TEST_CASE("relaxation names") {
  CHECK(relaxation_from_string("rsdr") == Relaxation::rsdr);
  CHECK(relaxation_from_string("ersdr1") == Relaxation::ersdr1);
  CHECK(relaxation_from_string("ersdr2") == Relaxation::ersdr2);
  CHECK(std::string(to_string(Relaxation::ersdr2)) == "ersdr2");
  CHECK_THROWS_AS(relaxation_from_string("csdr"), Error);
}
