#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "goldstein/adversary.hpp"

using namespace goldstein;

TEST_CASE("full first-order resisting oracle answers and refuses") {
  const int d = 6;
  ResistingOracleDet oracle(d, 7.0);
  for (int i = 0; i < d - 2; ++i) {
    Vec x(d, 0.0);
    x[1] = i;  // distinct points
    OracleResponse r = oracle.query(x);
    REQUIRE(r.value == 0.0);
    Vec e1(d, 0.0);
    e1[0] = 1.0;
    REQUIRE(r.gradient == e1);
  }
  REQUIRE(oracle.call_count() == d - 2);
  REQUIRE_THROWS_AS(oracle.query(Vec(d, 0.5)), BudgetExceededError);
}

TEST_CASE("materialized instance reproduces the resisting answers") {
  const int d = 8;
  const double L = 7.0, Delta = 1.0;
  std::vector<Vec> pts;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < d - 2; ++t) {
    Vec x(d);
    for (double& v : x) v = unif(rng);
    pts.push_back(x);
  }
  HardInstanceDet inst = materialize_det(pts, d, L, Delta);

  Vec e1(d, 0.0);
  e1[0] = L / 7.0;
  for (const Vec& x : pts) {
    REQUIRE(std::abs(inst.eval(x)) <= 1e-12);
    REQUIRE(dist(inst.grad(x), e1) <= 1e-12);
  }

  SECTION("v is unit and orthogonal to e_1 and the queried points") {
    REQUIRE(std::abs(norm(inst.v) - 1.0) <= 1e-12);
    REQUIRE(std::abs(inst.v[0]) <= 1e-10);
    for (const Vec& x : pts)
      REQUIRE(std::abs(dot(inst.v, x)) <= 1e-10 * std::max(1.0, norm(x)));
  }

  SECTION("outside every bump the function is the linear v-slope") {
    Vec far(d, 0.0);
    far = axpy(far, 0.5, inst.v);
    bool outside = true;
    for (const Vec& p : pts)
      if (dist(far, p) < inst.r) outside = false;
    if (outside) {
      REQUIRE(inst.eval(far) == Catch::Approx(L / 7.0 * dot(inst.v, far)).margin(1e-12));
      REQUIRE(dist(inst.grad(far), scale(inst.v, L / 7.0)) <= 1e-12);
    }
  }

  SECTION("h is continuous at the bump boundary") {
    std::mt19937_64 rng2(19);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < 1000; ++k) {
      Vec dir(d);
      for (double& v : dir) v = gauss(rng2);
      dir = scale(dir, inst.r / norm(dir));
      const Vec x = add(pts[k % pts.size()], dir);
      REQUIRE(std::abs(inst.bump_value(x, pts[k % pts.size()]) - dot(inst.v, x)) <= 1e-9);
    }
  }

  SECTION("h is 7-Lipschitz on sampled pairs") {
    std::mt19937_64 rng3(31);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> r_scale(0.0, 3.0 * inst.r);
    double worst = 0.0;
    for (int k = 0; k < 20000; ++k) {
      const Vec& center = pts[k % pts.size()];
      Vec d1(d), d2(d);
      for (int i = 0; i < d; ++i) {
        d1[i] = gauss(rng3);
        d2[i] = gauss(rng3);
      }
      const Vec x = axpy(center, r_scale(rng3) / norm(d1), d1);
      const Vec y = axpy(center, r_scale(rng3) / norm(d2), d2);
      if (dist(x, y) < 1e-12) continue;
      worst = std::max(worst, std::abs(inst.h(x) - inst.h(y)) / dist(x, y));
    }
    REQUIRE(worst <= 7.0 + 1e-6);
  }
}

TEST_CASE("materialization rejects degenerate transcripts") {
  const int d = 5;
  Vec p(d, 0.3);
  REQUIRE_THROWS_AS(materialize_det({p, p}, d, 7.0, 1.0), std::invalid_argument);
  std::vector<Vec> too_many(d - 1, Vec(d, 0.0));
  for (int i = 0; i < d - 1; ++i) too_many[i][1] = i;
  REQUIRE_THROWS_AS(materialize_det(too_many, d, 7.0, 1.0), std::invalid_argument);
}

TEST_CASE("sampled gradient hull stays above the 1/36 bound") {
  const int d = 7;
  std::vector<Vec> pts;
  for (int t = 0; t < 3; ++t) {
    Vec x(d, 0.0);
    x[2] = 0.5 * (t + 1);
    pts.push_back(x);
  }
  HardInstanceDet inst = materialize_det(pts, d, 7.0, 1.0);
  NonstationarityEvidence ev = nonstationarity_evidence_det(inst, 100000, 4);
  REQUIRE(ev.min_sampled_norm > 1.0 / 36.0);
}

TEST_CASE("gradient-only resisting oracle and 1-D materialization") {
  ResistingOracleGradOnly oracle(10);
  for (int i = 0; i < 10; ++i) {
    OracleResponse r = oracle.query({-0.1 * i});
    REQUIRE_FALSE(r.value.has_value());
    REQUIRE(r.gradient == Vec{1.0});
  }
  REQUIRE_THROWS_AS(oracle.query({5.0}), BudgetExceededError);

  std::vector<double> queried;
  for (const auto& [x, r] : oracle.transcript().queries) queried.push_back(x[0]);
  const double xhat = -1.0, delta = 0.1;
  HardInstance1D inst = materialize_1d(queried, xhat, delta);

  SECTION("slope 1 across the delta-ball at xhat") {
    REQUIRE(inst.eval(xhat) == 0.0);
    for (double s = -delta; s <= delta; s += delta / 7.0)
      REQUIRE(inst.deriv(xhat + s) == 1.0);
  }
  SECTION("recorded derivative stays 1 at every queried point") {
    for (double q : queried) REQUIRE(inst.deriv(q) == 1.0);
  }
  SECTION("image and Lipschitz bounds") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(-4.0, 4.0);
    double prev_x = unif(rng), prev_f = inst.eval(prev_x);
    for (int k = 0; k < 20000; ++k) {
      const double x = unif(rng);
      const double f = inst.eval(x);
      REQUIRE(std::abs(f) <= 1.0);
      if (std::abs(x - prev_x) > 1e-12)
        REQUIRE(std::abs(f - prev_f) / std::abs(x - prev_x) <= 1.0 + 1e-9);
      prev_x = x;
      prev_f = f;
    }
  }
}

TEST_CASE("end-to-end gradient-only attack") {
  AttackReport1D rep = attack_grad_only(25, 0.1, 0.5);
  REQUIRE(rep.consistent);
  REQUIRE(rep.queries == 25);
  REQUIRE(rep.cert_norm == 1.0);
  // the returned point was never queried
  for (const auto& q : rep.instance.queried) REQUIRE(q != rep.xhat);
}

TEST_CASE("end-to-end deterministic attack on a small instance") {
  HardInstanceDet inst;
  AttackReport rep =
      attack_det(AttackAlgo::Det, 10, 8, 0.01, 0.02, 7.0, 1.0, 0, 100000, &inst);
  REQUIRE(rep.consistent);
  REQUIRE(rep.queries <= 8);
  REQUIRE(rep.all_iterates_nonstationary);
  REQUIRE(rep.min_sampled_hull_norm > 1.0 / 36.0);
  REQUIRE(rep.solver_status != SolverStatus::Converged);
}
