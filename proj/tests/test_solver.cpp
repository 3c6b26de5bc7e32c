#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "goldstein/builtins.hpp"
#include "goldstein/oracle.hpp"
#include "goldstein/smoothing.hpp"
#include "goldstein/solver.hpp"

using namespace goldstein;

namespace {

FunctionOracle quadratic_1d() {
  return FunctionOracle(
      1, [](const Vec& x) { return 0.5 * x[0] * x[0]; }, [](const Vec& x) { return Vec{x[0]}; });
}

}  // namespace

TEST_CASE("binary search exits immediately when the far probe decorrelates") {
  // x = 1, g0 = 1, delta = 0.5, eps = 0.1. The probe at t = delta gives
  // f'(0.5) = 0.5 < ||g0||/2 + eps/4 = 0.525, so the loop is never entered
  // and the far gradient comes back after a single oracle call.
  FunctionOracle oracle = quadratic_1d();
  BinarySearchOutcome out = binary_search(oracle, {1.0}, {1.0}, 0.5, 0.1, 64);
  REQUIRE_FALSE(out.stalled);
  REQUIRE(out.steps == 0);
  REQUIRE(out.g_new == Vec{0.5});
  REQUIRE(out.point == Vec{0.5});
  REQUIRE(oracle.call_count() == 1);
  REQUIRE(out.g_new[0] * 1.0 <= 0.75 * 1.0 + 1e-12);
}

TEST_CASE("binary search follows the scripted trace on a smooth valley") {
  // Piecewise-quadratic valley with f'(0) = 1, f'(-0.5) = -0.5, f'(-1) = 1
  // (3-smooth). With x = 0, g0 = 1, delta = 1, eps = 0.1 the failed-descent
  // precondition holds: f(-1) - f(0) = -0.25 > -0.5. The probe at t = 1 has
  // f'(-1) = 1 >= 0.525, so the loop is entered; t = 0.5, and the potential
  // comparison (0.25 > 0.125) keeps the right half; the probe at t = 0.5 has
  // f'(-0.5) = -0.5 < 0.525, so the loop exits after one step.
  auto f = [](double y) {
    if (y >= 0.0) return y;
    if (y >= -0.5) return y + 1.5 * y * y;
    if (y >= -1.0) return -0.75 - 1.5 * y * y - 2.0 * y;
    return y + 0.75;
  };
  auto fp = [](double y) {
    if (y >= 0.0) return 1.0;
    if (y >= -0.5) return 1.0 + 3.0 * y;
    if (y >= -1.0) return -3.0 * y - 2.0;
    return 1.0;
  };
  FunctionOracle oracle(
      1, [&](const Vec& x) { return f(x[0]); }, [&](const Vec& x) { return Vec{fp(x[0])}; });
  BinarySearchOutcome out = binary_search(oracle, {0.0}, {1.0}, 1.0, 0.1, 64);
  REQUIRE_FALSE(out.stalled);
  REQUIRE(out.steps == 1);
  REQUIRE(out.g_new == Vec{-0.5});
  REQUIRE(out.point == Vec{-0.5});
  REQUIRE(out.g_new[0] * 1.0 <= 0.75 * 1.0 + 1e-12);
}

TEST_CASE("binary search stalls when values and gradients are inconsistent") {
  // constant gradient with flat values: every probe keeps the loop condition
  // true, so the step cap is the only way out
  FunctionOracle oracle(
      1, [](const Vec&) { return 0.0; }, [](const Vec&) { return Vec{1.0}; });
  BinarySearchOutcome out = binary_search(oracle, {0.05}, {1.0}, 0.5, 0.1, 16);
  REQUIRE(out.stalled);
}

TEST_CASE("deterministic solver on a smooth quadratic") {
  FunctionOracle oracle = quadratic_1d();
  SolverConfig cfg;
  cfg.delta = 0.1;
  cfg.epsilon = 0.05;
  cfg.Delta = 0.5;
  cfg.L = 1.0;
  cfg.H = 1.0;
  SolverResult res = deterministic_goldstein_sg(oracle, {1.0}, cfg);
  REQUIRE(res.status == SolverStatus::Converged);
  REQUIRE(res.certificate.norm <= 0.05);
  REQUIRE(res.outer_iters <= 200);

  // descent invariant along the accepted steps
  auto f = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  for (std::size_t i = 0; i + 1 < res.iterates.size(); ++i)
    REQUIRE(f(res.iterates[i + 1]) <= f(res.iterates[i]) - 0.1 * 0.05 / 2.0 + 1e-12);

  FunctionOracle checker = quadratic_1d();
  REQUIRE(verify_certificate(res.certificate, checker));
}

TEST_CASE("zero gradient at the start returns immediately") {
  FunctionOracle oracle(
      2, [](const Vec&) { return 3.0; }, [](const Vec&) { return Vec{0.0, 0.0}; });
  SolverConfig cfg;
  cfg.delta = 0.1;
  cfg.epsilon = 0.05;
  cfg.max_outer = 10;
  SolverResult res = deterministic_goldstein_sg(oracle, {1.0, 1.0}, cfg);
  REQUIRE(res.status == SolverStatus::Converged);
  REQUIRE(res.oracle_calls == 1);
  REQUIRE(res.certificate.norm == 0.0);
}

TEST_CASE("deterministic solver transcripts are bit-identical across runs") {
  auto run = [] {
    Circuit c = Circuit::compile(builtin_abs1d().def);
    SmoothingParams params;
    params.a = 0.01;
    SmoothedCircuitOracle oracle(smooth(c, params, 2.0));
    SolverConfig cfg;
    cfg.delta = 0.1;
    cfg.epsilon = 0.1;
    cfg.max_outer = 500;
    cfg.L = 4.0;
    cfg.H = 200.0;
    SolverResult res = deterministic_goldstein_sg(oracle, {1.0, 0.0, 0.0}, cfg);
    return std::make_pair(res, oracle.transcript().queries);
  };
  auto [res1, t1] = run();
  auto [res2, t2] = run();
  REQUIRE(res1.status == SolverStatus::Converged);
  REQUIRE(res1.certificate.norm <= 0.1);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    REQUIRE(t1[i].first == t2[i].first);
    REQUIRE(t1[i].second.gradient == t2[i].second.gradient);
  }
}

TEST_CASE("randomized line-sample solver is reproducible given the seed") {
  auto run = [](uint64_t seed) {
    Circuit c = Circuit::compile(builtin_abs1d().def);
    SmoothingParams params;
    params.a = 0.01;
    SmoothedCircuitOracle oracle(smooth(c, params, 2.0));
    SolverConfig cfg;
    cfg.delta = 0.1;
    cfg.epsilon = 0.1;
    cfg.max_outer = 500;
    cfg.L = 4.0;
    SolverResult res = randomized_goldstein_sg(oracle, {1.0, 0.0, 0.0}, cfg, seed);
    return res;
  };
  SolverResult a = run(5), b = run(5);
  REQUIRE(a.status == SolverStatus::Converged);
  REQUIRE(a.oracle_calls == b.oracle_calls);
  REQUIRE(a.point == b.point);
  REQUIRE(a.certificate.norm == b.certificate.norm);
}

TEST_CASE("sgd on a linear function cannot decrease the gradient norm") {
  const Vec v{0.5, 0.5};
  FunctionOracle oracle(
      2, [&](const Vec& x) { return dot(v, x); }, [&](const Vec&) { return v; });
  SolverResult res = sgd_on_uniform_smoothing(oracle, {0.0, 0.0}, 0.1, 0.1, 50, 0.1, 3);
  REQUIRE(res.status == SolverStatus::OuterBudgetExhausted);
  REQUIRE(res.certificate.norm == Catch::Approx(norm(v)).margin(1e-9));
}

TEST_CASE("sgd converges on the smoothed |x|") {
  Circuit c = Circuit::compile(builtin_abs1d().def);
  SmoothingParams params;
  params.a = 0.01;
  SmoothedCircuitOracle oracle(smooth(c, params, 2.0));
  SolverResult res =
      sgd_on_uniform_smoothing(oracle, {1.0, 0.0, 0.0}, 0.1, 0.1, 3000, 0.01, 11);
  REQUIRE(res.certificate.norm <= 0.1);
  REQUIRE(res.status == SolverStatus::Converged);
}

TEST_CASE("ball sampler is centered") {
  // Monte-Carlo mean of uniform ball points must vanish componentwise
  std::mt19937_64 rng(1);
  const int n = 1000000;
  const Vec c{0.0, 0.0, 0.0};
  Vec mean(3, 0.0);
  for (const Vec& x : uniform_ball_points(c, 1.0, n, 77))
    for (int i = 0; i < 3; ++i) mean[i] += x[i];
  for (int i = 0; i < 3; ++i) {
    mean[i] /= n;
    // componentwise std of a uniform ball coordinate is ~ 1/sqrt(5)
    REQUIRE(std::abs(mean[i]) <= 3.0 / std::sqrt(5.0 * n));
  }
}

TEST_CASE("normalized gradient descent marches with unit steps") {
  FunctionOracle oracle(
      1, [](const Vec& x) { return x[0]; }, [](const Vec&) { return Vec{1.0}; });
  SolverResult res = normalized_gradient_descent(oracle, {0.0}, 0.1, 0.01, 5);
  REQUIRE(res.outer_iters == 5);
  REQUIRE(res.point[0] == Catch::Approx(-0.4).margin(1e-12));
  REQUIRE(res.status == SolverStatus::OuterBudgetExhausted);
}
