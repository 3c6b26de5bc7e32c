#pragma once

// Descent methods driven by a first-order oracle: a deterministic
// binary-search line probe, the deterministic Goldstein subgradient method
// built on it, a randomized line-sample variant, and a gradient-only
// randomized-smoothing baseline. All of them report a checkable stationarity
// certificate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "goldstein/linalg.hpp"
#include "goldstein/oracle.hpp"
#include "goldstein/stationarity.hpp"

namespace goldstein {

struct SolverConfig {
  double delta = 0.1;
  double epsilon = 0.1;
  int max_outer = 0;      // <= 0: derived from Delta when known, else 100000
  int max_inner = 0;      // <= 0: derived from L when known, else 100000
  int bs_max_steps = 0;   // <= 0: derived from H when known, else 64
  std::optional<double> L;      // Lipschitz constant, when known
  std::optional<double> H;      // gradient Lipschitz constant, when known
  std::optional<double> Delta;  // f(x0) - inf f upper bound, when known
};

enum class SolverStatus { Converged, OuterBudgetExhausted, BinarySearchStalled };

inline std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "Converged";
    case SolverStatus::OuterBudgetExhausted: return "OuterBudgetExhausted";
    case SolverStatus::BinarySearchStalled: return "BinarySearchStalled";
  }
  return "?";
}

struct SolverResult {
  Vec point;
  GoldsteinCertificate certificate;
  int oracle_calls = 0;
  int outer_iters = 0;
  int inner_iters_total = 0;
  SolverStatus status = SolverStatus::OuterBudgetExhausted;
  std::optional<double> final_value;
  std::vector<Vec> iterates;      // outer iterate sequence, x0 first
  int max_bs_steps = 0;           // largest single binary-search step count
  int max_inner_per_outer = 0;
  int shrinkage_violations = 0;   // inner steps missing the expected norm decay
};

struct BinarySearchOutcome {
  Vec g_new;
  Vec point;          // the probe point whose gradient is returned
  int steps = 0;      // while-loop iterations taken
  bool stalled = false;
};

// Bisects t in [0, delta] along the ray x - t * g0/||g0|| until the probe
// gradient stops correlating with g0:
//   while  grad(x - t u) . u >= ||g0||/2 + eps/4:
//     t = (lo + hi) / 2
//     if f(x - hi u) + (hi/2)||g0|| > f(x - t u) + (t/2)||g0||: lo = t
//     else: hi = t
// and returns grad(x - t u). The bisection keeps the half of [lo, hi] whose
// average directional derivative is below ||g0||/2, so when the failed
// descent test guarantees that average over [0, delta] and the function is
// H-smooth, it terminates within O(log(H delta / eps)) steps and the
// returned g satisfies g . g0 <= (3/4)||g0||^2. Exceeding max_steps marks
// the result stalled (the function is effectively not smooth at this scale,
// or the oracle's values and gradients are mutually inconsistent). Probe
// responses are memoized per t so each distinct probe costs one oracle call.
inline BinarySearchOutcome binary_search(Oracle& oracle, const Vec& x, const Vec& g0,
                                         double delta, double epsilon, int max_steps) {
  const double n0 = norm(g0);
  if (n0 == 0.0) throw std::invalid_argument("binary_search: g0 must be nonzero");
  const Vec u = scale(g0, 1.0 / n0);

  std::map<double, OracleResponse> cache;
  auto probe = [&](double t) -> const OracleResponse& {
    auto it = cache.find(t);
    if (it == cache.end()) it = cache.emplace(t, oracle.query(axpy(x, -t, u))).first;
    return it->second;
  };

  double lo = 0.0, hi = delta, t = delta;
  BinarySearchOutcome out;
  while (dot(probe(t).gradient, u) >= 0.5 * n0 + epsilon / 4.0) {
    if (out.steps >= max_steps) {
      out.stalled = true;
      break;
    }
    ++out.steps;
    t = 0.5 * (lo + hi);
    const double at_hi = *probe(hi).value + 0.5 * hi * n0;
    const double at_t = *probe(t).value + 0.5 * t * n0;
    if (at_hi > at_t)
      lo = t;
    else
      hi = t;
  }
  out.g_new = probe(t).gradient;
  out.point = axpy(x, -t, u);
  return out;
}

namespace detail {

// Convex-combination witness for the working vector g: points within
// B_delta(x), their gradients, and weights mixed by the same updates as g.
struct Witness {
  std::vector<Vec> points;
  std::vector<Vec> grads;
  Vec weights;

  void reset(const Vec& x, const Vec& g) {
    points = {x};
    grads = {g};
    weights = {1.0};
  }
  void mix(double lambda, const Vec& y, const Vec& gy) {
    for (double& w : weights) w *= (1.0 - lambda);
    if (lambda > 0.0) {
      points.push_back(y);
      grads.push_back(gy);
      weights.push_back(lambda);
    }
  }
  // Re-expresses the combination over its own support via the min-norm
  // point and drops zero-weight atoms; returns the (possibly smaller) g.
  Vec compact() {
    MinNormResult mn = min_norm_point(grads);
    std::vector<Vec> np, ng;
    Vec nw;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (mn.weights[i] <= 0.0) continue;
      np.push_back(points[i]);
      ng.push_back(grads[i]);
      nw.push_back(mn.weights[i]);
    }
    points = std::move(np);
    grads = std::move(ng);
    weights = std::move(nw);
    return mn.g;
  }
  GoldsteinCertificate to_certificate(const Vec& x, double delta, const Vec& g) const {
    GoldsteinCertificate c;
    c.x = x;
    c.delta = delta;
    c.support_points = points;
    c.support_grads = grads;
    c.weights = weights;
    c.g = g;
    c.norm = norm(g);
    return c;
  }
};

inline int default_max_inner(const SolverConfig& cfg) {
  if (cfg.max_inner > 0) return cfg.max_inner;
  if (cfg.L) {
    const double L = std::max(*cfg.L, cfg.epsilon);
    return static_cast<int>(
               std::ceil(64.0 * L * L * std::max(std::log(L / cfg.epsilon), 1e-9) /
                         (cfg.epsilon * cfg.epsilon))) +
           1;
  }
  return 100000;
}

inline int default_max_outer(const SolverConfig& cfg) {
  if (cfg.max_outer > 0) return cfg.max_outer;
  if (cfg.Delta)
    return static_cast<int>(std::ceil(4.0 * *cfg.Delta / (cfg.delta * cfg.epsilon)));
  return 100000;
}

inline int default_bs_steps(const SolverConfig& cfg) {
  if (cfg.bs_max_steps > 0) return cfg.bs_max_steps;
  if (cfg.H) {
    const double arg = std::max(8.0 * *cfg.H * cfg.delta / cfg.epsilon, 2.0);
    return static_cast<int>(std::ceil(std::log2(arg))) + 8;
  }
  return 64;
}

}  // namespace detail

// Deterministic Goldstein subgradient method. Outer loop: take the gradient
// at x_t; while the descent test f(x_t - delta g/||g||) - f(x_t) >
// -(delta/2)||g|| fails and ||g|| > eps, pull a fresh hull member g_new via
// binary_search and replace g by the norm-minimizing convex combination
// g + lambda (g_new - g), lambda* = clamp(g.(g - g_new)/||g - g_new||^2, 0, 1).
// Stops with a certificate once ||g|| <= eps; otherwise steps
// x_{t+1} = x_t - delta g/||g||, which the accepted test guarantees decreases
// f by at least (delta/2)||g|| >= delta*eps/2.
inline SolverResult deterministic_goldstein_sg(Oracle& oracle, const Vec& x0,
                                               const SolverConfig& cfg) {
  if (cfg.delta <= 0 || cfg.epsilon <= 0)
    throw std::invalid_argument("solver: delta and epsilon must be positive");
  const int max_outer = detail::default_max_outer(cfg);
  const int max_inner = detail::default_max_inner(cfg);
  const int bs_steps = detail::default_bs_steps(cfg);
  const int compact_at = 4 * max_inner;

  SolverResult res;
  res.point = x0;
  Vec x = x0;
  double best_norm = std::numeric_limits<double>::infinity();
  detail::Witness witness;

  std::optional<OracleResponse> carried;  // response at x from the accepted step
  try {
    for (int outer = 0; outer < max_outer; ++outer) {
      res.iterates.push_back(x);
      res.outer_iters = outer + 1;
      OracleResponse at_x = carried ? *carried : oracle.query(x);
      carried.reset();
      const double fx = at_x.value ? *at_x.value : 0.0;
      if (!at_x.value)
        throw std::invalid_argument("deterministic_goldstein_sg: needs function values");
      Vec g = at_x.gradient;
      witness.reset(x, g);

      int inner = 0;
      int tie_repeats = 0;
      bool stalled = false;
      std::optional<OracleResponse> step_resp;
      while (true) {
        const double gn = norm(g);
        if (gn <= cfg.epsilon) break;
        const Vec x_step = axpy(x, -cfg.delta / gn, g);
        OracleResponse at_step = oracle.query(x_step);
        if (*at_step.value - fx <= -(cfg.delta / 2.0) * gn) {
          step_resp = at_step;  // descent accepted; reuse for the next outer
          break;
        }
        if (++inner > max_inner) break;
        BinarySearchOutcome bs = binary_search(oracle, x, g, cfg.delta, cfg.epsilon, bs_steps);
        res.max_bs_steps = std::max(res.max_bs_steps, bs.steps);
        if (bs.stalled) {
          stalled = true;
          break;
        }
        const Vec diff = sub(bs.g_new, g);
        const double dn2 = dot(diff, diff);
        double lambda = 0.0;
        if (dn2 > 0.0) {
          lambda = std::clamp(-dot(g, diff) / dn2, 0.0, 1.0);
          tie_repeats = 0;
        } else if (++tie_repeats >= 2) {
          stalled = true;  // oracle keeps returning the current g verbatim
          break;
        }
        const double gn2_before = gn * gn;
        const double gnew_dot_g = dot(bs.g_new, g);
        witness.mix(lambda, bs.point, bs.g_new);
        g = axpy(g, lambda, diff);
        if (cfg.L && gnew_dot_g <= 0.75 * gn2_before) {
          const double L = *cfg.L;
          const double shrink = 1.0 - cfg.epsilon * cfg.epsilon / (64.0 * L * L);
          if (dot(g, g) > shrink * gn2_before + 1e-12) ++res.shrinkage_violations;
        }
        if (static_cast<int>(witness.points.size()) > compact_at) g = witness.compact();
      }
      res.inner_iters_total += inner;
      res.max_inner_per_outer = std::max(res.max_inner_per_outer, inner);

      const double gn = norm(g);
      if (gn < best_norm) {
        best_norm = gn;
        res.point = x;
        res.certificate = witness.to_certificate(x, cfg.delta, g);
        res.final_value = fx;
      }
      if (stalled) {
        res.status = SolverStatus::BinarySearchStalled;
        res.oracle_calls = oracle.call_count();
        return res;
      }
      if (gn <= cfg.epsilon) {
        res.status = SolverStatus::Converged;
        res.oracle_calls = oracle.call_count();
        return res;
      }
      if (!step_resp) break;  // inner budget exhausted without a usable step
      const Vec x_next = axpy(x, -cfg.delta / gn, g);
      if (*step_resp->value > fx - (cfg.delta / 2.0) * gn + 1e-12)
        throw std::logic_error("descent invariant violated");
      x = x_next;
      carried = step_resp;
    }
  } catch (const BudgetExceededError&) {
    // fall through: report the best certificate found within budget
  }
  res.status = SolverStatus::OuterBudgetExhausted;
  res.oracle_calls = oracle.call_count();
  if (res.certificate.support_points.empty()) {
    res.certificate.x = x;
    res.certificate.delta = cfg.delta;
    res.certificate.norm = std::numeric_limits<double>::infinity();
    res.point = x;
  }
  return res;
}

// Same outer structure with the binary search replaced by a single uniform
// sample on the segment [x, x - delta g/||g||] per inner iteration.
// Reproducible given the seed.
inline SolverResult randomized_goldstein_sg(Oracle& oracle, const Vec& x0,
                                            const SolverConfig& cfg, uint64_t seed) {
  if (cfg.delta <= 0 || cfg.epsilon <= 0)
    throw std::invalid_argument("solver: delta and epsilon must be positive");
  const int max_outer = detail::default_max_outer(cfg);
  const int max_inner = detail::default_max_inner(cfg);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SolverResult res;
  res.point = x0;
  Vec x = x0;
  double best_norm = std::numeric_limits<double>::infinity();
  detail::Witness witness;
  std::optional<OracleResponse> carried;
  try {
    for (int outer = 0; outer < max_outer; ++outer) {
      res.iterates.push_back(x);
      res.outer_iters = outer + 1;
      OracleResponse at_x = carried ? *carried : oracle.query(x);
      carried.reset();
      if (!at_x.value)
        throw std::invalid_argument("randomized_goldstein_sg: needs function values");
      const double fx = *at_x.value;
      Vec g = at_x.gradient;
      witness.reset(x, g);

      int inner = 0;
      std::optional<OracleResponse> step_resp;
      while (true) {
        const double gn = norm(g);
        if (gn <= cfg.epsilon) break;
        const Vec x_step = axpy(x, -cfg.delta / gn, g);
        OracleResponse at_step = oracle.query(x_step);
        if (*at_step.value - fx <= -(cfg.delta / 2.0) * gn) {
          step_resp = at_step;
          break;
        }
        if (++inner > max_inner) break;
        const double s = unif(rng);
        const Vec y = axpy(x, -s * cfg.delta / gn, g);
        const Vec g_new = oracle.query(y).gradient;
        const Vec diff = sub(g_new, g);
        const double dn2 = dot(diff, diff);
        const double lambda = dn2 > 0.0 ? std::clamp(-dot(g, diff) / dn2, 0.0, 1.0) : 0.0;
        witness.mix(lambda, y, g_new);
        g = axpy(g, lambda, diff);
        if (static_cast<int>(witness.points.size()) > 4 * max_inner) g = witness.compact();
      }
      res.inner_iters_total += inner;
      res.max_inner_per_outer = std::max(res.max_inner_per_outer, inner);

      const double gn = norm(g);
      if (gn < best_norm) {
        best_norm = gn;
        res.point = x;
        res.certificate = witness.to_certificate(x, cfg.delta, g);
        res.final_value = fx;
      }
      if (gn <= cfg.epsilon) {
        res.status = SolverStatus::Converged;
        res.oracle_calls = oracle.call_count();
        return res;
      }
      if (!step_resp) break;
      x = axpy(x, -cfg.delta / gn, g);
      carried = step_resp;
    }
  } catch (const BudgetExceededError&) {
  }
  res.status = SolverStatus::OuterBudgetExhausted;
  res.oracle_calls = oracle.call_count();
  if (res.certificate.support_points.empty()) {
    res.certificate.x = x;
    res.certificate.delta = cfg.delta;
    res.certificate.norm = std::numeric_limits<double>::infinity();
    res.point = x;
  }
  return res;
}

// Gradient-only baseline: SGD on the uniform ball-smoothing of f, iterating
// x <- x - eta * grad f(x + delta u) with u uniform in the unit ball. The
// returned point is the trailing iterate with the smallest certified
// Goldstein norm.
inline SolverResult sgd_on_uniform_smoothing(Oracle& oracle, const Vec& x0, double delta,
                                             double epsilon, int steps, double step_size,
                                             uint64_t seed) {
  if (delta <= 0 || epsilon <= 0 || steps < 1 || step_size <= 0)
    throw std::invalid_argument("sgd_on_uniform_smoothing: bad parameters");
  const int d = oracle.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto ball_point = [&]() {
    Vec u(d);
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) {
      u[i] = gauss(rng);
      n2 += u[i] * u[i];
    }
    const double r = std::pow(unif(rng), 1.0 / d) / std::sqrt(std::max(n2, 1e-300));
    for (double& v : u) v *= r;
    return u;
  };

  SolverResult res;
  res.point = x0;
  Vec x = x0;
  std::vector<Vec> trailing;
  try {
    for (int k = 0; k < steps; ++k) {
      res.iterates.push_back(x);
      res.outer_iters = k + 1;
      const Vec y = axpy(x, delta, ball_point());
      const Vec g = oracle.query(y).gradient;
      trailing.push_back(x);
      if (static_cast<int>(trailing.size()) > 8) trailing.erase(trailing.begin());
      x = axpy(x, -step_size, g);
    }
  } catch (const BudgetExceededError&) {
  }
  trailing.push_back(x);

  double best = std::numeric_limits<double>::infinity();
  res.certificate.delta = delta;
  res.certificate.norm = best;
  res.certificate.x = x;
  try {
    for (const Vec& c : trailing) {
      GoldsteinCertificate cert =
          certify(oracle, c, delta, 2 * d + 4, SamplePolicy::UniformBall, seed ^ 0x9e3779b9ull);
      if (cert.norm < best) {
        best = cert.norm;
        res.certificate = cert;
        res.point = c;
      }
    }
  } catch (const BudgetExceededError&) {
  }
  try {
    res.final_value = oracle.query(res.point).value;
  } catch (const BudgetExceededError&) {
  }
  res.oracle_calls = oracle.call_count();
  res.status = best <= epsilon ? SolverStatus::Converged : SolverStatus::OuterBudgetExhausted;
  return res;
}

// Deterministic gradient-only baseline: fixed-step normalized gradient
// descent, x <- x - delta * g/||g||. Returns the final iterate with a
// single-gradient certificate.
inline SolverResult normalized_gradient_descent(Oracle& oracle, const Vec& x0, double delta,
                                                double epsilon, int steps) {
  if (delta <= 0 || steps < 1)
    throw std::invalid_argument("normalized_gradient_descent: bad parameters");
  SolverResult res;
  Vec x = x0;
  Vec g(x0.size(), 0.0);
  try {
    for (int k = 0; k < steps; ++k) {
      res.iterates.push_back(x);
      res.outer_iters = k + 1;
      g = oracle.query(x).gradient;
      const double gn = norm(g);
      if (gn <= epsilon) break;
      x = axpy(x, -delta / gn, g);
    }
  } catch (const BudgetExceededError&) {
  }
  res.point = res.iterates.empty() ? x0 : res.iterates.back();
  res.certificate.x = res.point;
  res.certificate.delta = delta;
  res.certificate.support_points = {res.point};
  res.certificate.support_grads = {g};
  res.certificate.weights = {1.0};
  res.certificate.g = g;
  res.certificate.norm = norm(g);
  res.oracle_calls = oracle.call_count();
  res.status = res.certificate.norm <= epsilon ? SolverStatus::Converged
                                               : SolverStatus::OuterBudgetExhausted;
  return res;
}

}  // namespace goldstein
