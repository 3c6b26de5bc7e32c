#pragma once

// Goldstein (delta, eps)-stationarity certification: min-norm point in the
// convex hull of sampled gradients over the delta-ball, with deterministic
// (grid / low-discrepancy) and seeded-uniform sampling policies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goldstein/linalg.hpp"
#include "goldstein/oracle.hpp"

namespace goldstein {

struct MinNormResult {
  Vec weights;  // convex weights over the input vectors
  Vec g;        // the min-norm combination
  double norm = 0.0;
  bool exact = true;  // false when the corrective-step cap was hit
};

namespace detail {

// Solve the (m+1)x(m+1) KKT system for the affine minimizer of ||V alpha||
// subject to sum(alpha) = 1, over the active set. Gaussian elimination with
// partial pivoting; a tiny ridge keeps degenerate Gram matrices solvable.
inline bool solve_affine_minimizer(const std::vector<const Vec*>& active, Vec& alpha) {
  const int m = static_cast<int>(active.size());
  const int n = m + 1;
  std::vector<Vec> A(n, Vec(n + 1, 0.0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) A[i][j] = dot(*active[i], *active[j]);
    A[i][i] += 1e-12;
    A[i][m] = 1.0;
    A[i][n] = 0.0;
  }
  for (int j = 0; j < m; ++j) A[m][j] = 1.0;
  A[m][n] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-300) return false;
    std::swap(A[col], A[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      if (f == 0.0) continue;
      for (int c = col; c <= n; ++c) A[r][c] -= f * A[col][c];
    }
  }
  alpha.assign(m, 0.0);
  for (int i = 0; i < m; ++i) alpha[i] = A[i][n] / A[i][i];
  return true;
}

}  // namespace detail

// Wolfe's min-norm-point algorithm over conv{vectors}. Stops at duality gap
// max_i (g.g - g.v_i) <= 1e-9 (1 + ||g||^2); caps corrective steps at 1e4.
inline MinNormResult min_norm_point(const std::vector<Vec>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("min_norm_point: empty input");
  const std::size_t d = vectors[0].size();
  for (const auto& v : vectors)
    if (v.size() != d) throw std::invalid_argument("min_norm_point: mixed dimensions");
  const int n = static_cast<int>(vectors.size());

  int start = 0;
  for (int i = 1; i < n; ++i)
    if (dot(vectors[i], vectors[i]) < dot(vectors[start], vectors[start])) start = i;

  std::vector<int> active{start};
  Vec w{1.0};
  Vec g = vectors[start];

  MinNormResult res;
  res.exact = true;
  const int max_steps = 10000;
  int steps = 0;
  while (true) {
    if (++steps > max_steps) {
      res.exact = false;
      break;
    }
    const double gg = dot(g, g);
    int best = 0;
    double best_dot = dot(g, vectors[0]);
    for (int i = 1; i < n; ++i) {
      const double gv = dot(g, vectors[i]);
      if (gv < best_dot) {
        best_dot = gv;
        best = i;
      }
    }
    if (gg - best_dot <= 1e-9 * (1.0 + gg)) break;  // duality gap closed
    bool already = false;
    for (int idx : active)
      if (idx == best) already = true;
    if (!already) {
      active.push_back(best);
      w.push_back(0.0);
    }

    // minor cycles: affine minimizer over the active set, projected back
    // onto the simplex face when it leaves it
    for (int minor = 0; minor < 1000; ++minor) {
      std::vector<const Vec*> pts;
      pts.reserve(active.size());
      for (int idx : active) pts.push_back(&vectors[idx]);
      Vec alpha;
      if (!detail::solve_affine_minimizer(pts, alpha)) break;
      bool interior = true;
      for (double a : alpha)
        if (a <= 1e-12) interior = false;
      if (interior) {
        w = alpha;
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] <= 1e-12 && w[i] > alpha[i]) theta = std::min(theta, w[i] / (w[i] - alpha[i]));
      std::vector<int> next_active;
      Vec next_w;
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double wi = (1.0 - theta) * w[i] + theta * alpha[i];
        if (wi > 1e-12) {
          next_active.push_back(active[i]);
          next_w.push_back(wi);
        }
      }
      if (next_active.empty()) {  // numerical collapse; keep the best atom
        next_active.push_back(active[0]);
        next_w.push_back(1.0);
      }
      active = std::move(next_active);
      w = std::move(next_w);
    }

    double wsum = 0.0;
    for (double wi : w) wsum += wi;
    for (double& wi : w) wi /= wsum;
    g.assign(d, 0.0);
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) g[j] += w[i] * vectors[active[i]][j];
  }

  res.weights.assign(n, 0.0);
  for (std::size_t i = 0; i < active.size(); ++i) res.weights[active[i]] = w[i];
  res.g = g;
  res.norm = norm(g);
  return res;
}

struct GoldsteinCertificate {
  Vec x;
  double delta = 0.0;
  std::vector<Vec> support_points;
  std::vector<Vec> support_grads;
  Vec weights;
  Vec g;
  double norm = 0.0;
  bool exact = true;
};

inline nlohmann::json to_json(const GoldsteinCertificate& c) {
  return nlohmann::json{{"x", c.x},
                        {"delta", c.delta},
                        {"norm", c.norm},
                        {"g", c.g},
                        {"weights", c.weights},
                        {"points", c.support_points},
                        {"grads", c.support_grads},
                        {"exact", c.exact}};
}

enum class SamplePolicy { Grid, LowDiscrepancy, UniformBall };

inline SamplePolicy sample_policy_from_string(const std::string& s) {
  if (s == "grid") return SamplePolicy::Grid;
  if (s == "lds") return SamplePolicy::LowDiscrepancy;
  if (s == "uniform") return SamplePolicy::UniformBall;
  throw std::invalid_argument("unknown sampling policy: " + s);
}

namespace detail {

// Beasley-Springer-Moro inverse normal CDF; ample accuracy for sample
// placement.
inline double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

inline double halton(uint64_t index, uint64_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline uint64_t nth_prime(int n) {
  static const uint64_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (n < 25) return primes[n];
  uint64_t cand = 97;
  int count = 24;
  while (count < n) {
    ++cand;
    bool prime = true;
    for (uint64_t p = 2; p * p <= cand; ++p)
      if (cand % p == 0) {
        prime = false;
        break;
      }
    if (prime) ++count;
  }
  return cand;
}

}  // namespace detail

// Deterministic low-discrepancy points in the ball B_delta(center): Halton
// coordinates mapped to a direction via the inverse normal CDF and a radius
// via u^(1/d).
inline std::vector<Vec> lds_ball_points(const Vec& center, double delta, int count) {
  const int d = static_cast<int>(center.size());
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int k = 1; k <= count; ++k) {
    Vec dir(d);
    double nrm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      double u = detail::halton(static_cast<uint64_t>(k), detail::nth_prime(i));
      u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
      dir[i] = detail::inverse_normal_cdf(u);
      nrm2 += dir[i] * dir[i];
    }
    const double nrm = std::sqrt(std::max(nrm2, 1e-300));
    const double u_r = detail::halton(static_cast<uint64_t>(k), detail::nth_prime(d));
    const double radius = delta * std::pow(std::max(u_r, 1e-12), 1.0 / d);
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = center[i] + radius * dir[i] / nrm;
    pts.push_back(std::move(p));
  }
  return pts;
}

inline std::vector<Vec> uniform_ball_points(const Vec& center, double delta, int count,
                                            uint64_t seed) {
  const int d = static_cast<int>(center.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) {
    Vec dir(d);
    double nrm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      dir[i] = gauss(rng);
      nrm2 += dir[i] * dir[i];
    }
    const double nrm = std::sqrt(std::max(nrm2, 1e-300));
    const double radius = delta * std::pow(unif(rng), 1.0 / d);
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = center[i] + radius * dir[i] / nrm;
    pts.push_back(std::move(p));
  }
  return pts;
}

// Axis-aligned grid in the cube inscribed in B_delta(center); falls back to
// +/- delta axis points when the sample budget cannot fill a grid.
inline std::vector<Vec> grid_ball_points(const Vec& center, double delta, int count) {
  const int d = static_cast<int>(center.size());
  std::vector<Vec> pts;
  if (d == 1) {
    if (count == 1) return {Vec{center[0]}};
    for (int i = 0; i < count; ++i)
      pts.push_back(Vec{center[0] - delta + 2.0 * delta * i / (count - 1)});
    return pts;
  }
  const double half = delta / std::sqrt(static_cast<double>(d));
  int k = static_cast<int>(std::floor(std::pow(static_cast<double>(count), 1.0 / d)));
  if (k >= 2) {
    std::vector<int> idx(d, 0);
    while (static_cast<int>(pts.size()) < count) {
      Vec p(center);
      for (int i = 0; i < d; ++i) p[i] += -half + 2.0 * half * idx[i] / (k - 1);
      pts.push_back(std::move(p));
      int i = 0;
      while (i < d && ++idx[i] == k) idx[i++] = 0;
      if (i == d) break;
    }
    return pts;
  }
  for (int i = 0; i < d && static_cast<int>(pts.size()) < count; ++i) {
    Vec p = center;
    p[i] += delta;
    pts.push_back(p);
    if (static_cast<int>(pts.size()) < count) {
      Vec q = center;
      q[i] -= delta;
      pts.push_back(q);
    }
  }
  return pts;
}

inline std::vector<Vec> sample_ball(const Vec& center, double delta, int count,
                                    SamplePolicy policy, uint64_t seed) {
  switch (policy) {
    case SamplePolicy::Grid: return grid_ball_points(center, delta, count);
    case SamplePolicy::LowDiscrepancy: return lds_ball_points(center, delta, count);
    case SamplePolicy::UniformBall: return uniform_ball_points(center, delta, count, seed);
  }
  return {};
}

// Queries gradients at x and at `samples` policy points of B_delta(x), then
// takes the min-norm point of their hull. The norm is an upper bound on the
// true Goldstein min-norm.
inline GoldsteinCertificate certify(Oracle& oracle, const Vec& x, double delta, int samples,
                                    SamplePolicy policy = SamplePolicy::LowDiscrepancy,
                                    uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("certify: samples must be >= 1");
  std::vector<Vec> points{x};
  for (auto& p : sample_ball(x, delta, samples, policy, seed)) points.push_back(std::move(p));
  std::vector<Vec> grads;
  grads.reserve(points.size());
  for (const auto& p : points) grads.push_back(oracle.query(p).gradient);
  MinNormResult mn = min_norm_point(grads);

  GoldsteinCertificate cert;
  cert.x = x;
  cert.delta = delta;
  cert.g = mn.g;
  cert.norm = mn.norm;
  cert.exact = mn.exact;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mn.weights[i] <= 0.0) continue;
    cert.support_points.push_back(points[i]);
    cert.support_grads.push_back(grads[i]);
    cert.weights.push_back(mn.weights[i]);
  }
  return cert;
}

// Re-queries the support gradients and re-checks every certificate
// invariant.
inline bool verify_certificate(const GoldsteinCertificate& cert, Oracle& oracle) {
  if (cert.support_points.size() != cert.weights.size() ||
      cert.support_points.size() != cert.support_grads.size() || cert.support_points.empty())
    return false;
  double wsum = 0.0;
  Vec combo(cert.x.size(), 0.0);
  for (std::size_t i = 0; i < cert.support_points.size(); ++i) {
    if (cert.weights[i] < 0.0) return false;
    wsum += cert.weights[i];
    if (dist(cert.support_points[i], cert.x) > cert.delta + 1e-12) return false;
    const Vec g = oracle.query(cert.support_points[i]).gradient;
    if (dist(g, cert.support_grads[i]) > 1e-9) return false;
    for (std::size_t j = 0; j < combo.size(); ++j) combo[j] += cert.weights[i] * g[j];
  }
  if (std::abs(wsum - 1.0) > 1e-12) return false;
  if (dist(combo, cert.g) > 1e-9) return false;
  if (std::abs(norm(cert.g) - cert.norm) > 1e-9) return false;
  return true;
}

}  // namespace goldstein
