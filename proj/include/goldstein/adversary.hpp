#pragma once

// Constructive lower-bound machinery: resisting oracles that answer
// uninformatively, and the post-hoc materialization of concrete functions
// consistent with the recorded transcripts, on which the queried iterates
// are provably far from stationary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "goldstein/linalg.hpp"
#include "goldstein/oracle.hpp"
#include "goldstein/solver.hpp"

namespace goldstein {

// Full first-order resisting oracle in R^d: every query is answered with
// value 0 and gradient (L/7) e_1, and refused after d-2 queries (beyond
// that the orthogonal direction needed by the materialization may not
// exist).
class ResistingOracleDet final : public Oracle {
 public:
  ResistingOracleDet(int d, double L) : d_(d), L_(L) {
    if (d < 3) throw std::invalid_argument("resisting oracle: dimension must be >= 3");
    set_budget(d - 2);
  }
  int dim() const override { return d_; }
  double lipschitz() const { return L_; }

 protected:
  OracleResponse answer(const Vec&) override {
    Vec g(d_, 0.0);
    g[0] = L_ / 7.0;
    return OracleResponse{0.0, g};
  }

 private:
  int d_;
  double L_;
};

// Gradient-only 1-D resisting oracle: every query is answered with
// derivative 1 and no value.
class ResistingOracleGradOnly final : public Oracle {
 public:
  explicit ResistingOracleGradOnly(int max_queries) { set_budget(max_queries); }
  int dim() const override { return 1; }
  bool has_values() const override { return false; }

 protected:
  OracleResponse answer(const Vec&) override { return OracleResponse{std::nullopt, Vec{1.0}}; }
};

// The materialized hard instance behind ResistingOracleDet's answers:
//   f(x) = max{ (L/7) h(x), -Delta },
// where h(x) = v.x away from the queried points and is locally rewritten
// inside each ball B_r(x_t) so that h(x_t) = 0 and grad h(x_t) = e_1, with
// v a unit vector orthogonal to e_1 and every queried point.
struct HardInstanceDet {
  int d = 0;
  std::vector<Vec> queried;  // distinct query points, T <= d-2
  double r = 0.0;            // bump radius, min pairwise distance / 4
  Vec v;                     // unit, orthogonal to span{e_1, queried...}
  double L = 0.0;
  double Delta = 0.0;

  // h inside B_r(z):
  //   g_z(x) = min{||x-z||^2/r^2, 1} v.x + (1 - min{...}) e_1.(x-z)
  double bump_value(const Vec& x, const Vec& z) const {
    const double q = std::min(dot(sub(x, z), sub(x, z)) / (r * r), 1.0);
    return q * dot(v, x) + (1.0 - q) * (x[0] - z[0]);
  }
  Vec bump_grad(const Vec& x, const Vec& z) const {
    const Vec w = sub(x, z);
    const double q = dot(w, w) / (r * r);
    // grad = (2/r^2)(v.x - e_1.(x-z)) (x-z) + q v + (1-q) e_1
    Vec g = scale(w, 2.0 * (dot(v, x) - w[0]) / (r * r));
    g = axpy(g, q, v);
    g[0] += (1.0 - q);
    return g;
  }
  std::optional<std::size_t> containing_bump(const Vec& x) const {
    for (std::size_t t = 0; t < queried.size(); ++t)
      if (dist(x, queried[t]) < r) return t;
    return std::nullopt;
  }
  double h(const Vec& x) const {
    if (auto t = containing_bump(x)) return bump_value(x, queried[*t]);
    return dot(v, x);
  }
  Vec grad_h(const Vec& x) const {
    if (auto t = containing_bump(x)) return bump_grad(x, queried[*t]);
    return v;
  }
  double eval(const Vec& x) const { return std::max(L / 7.0 * h(x), -Delta); }
  Vec grad(const Vec& x) const {
    if (L / 7.0 * h(x) >= -Delta) return scale(grad_h(x), L / 7.0);
    return Vec(d, 0.0);
  }
};

namespace detail {

inline void orthogonalize(Vec& w, const std::vector<Vec>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const Vec& b : basis) w = axpy(w, -dot(w, b), b);
}

}  // namespace detail

// Builds the concrete function behind the transcript of ResistingOracleDet.
// Points must be distinct (min pairwise gap >= 1e-9) and number at most d-2.
inline HardInstanceDet materialize_det(const std::vector<Vec>& points, int d, double L,
                                       double Delta) {
  if (d < 3) throw std::invalid_argument("materialize_det: dimension must be >= 3");
  if (static_cast<int>(points.size()) > d - 2)
    throw std::invalid_argument("materialize_det: more than d-2 query points");
  HardInstanceDet inst;
  inst.d = d;
  inst.queried = points;
  inst.L = L;
  inst.Delta = Delta;

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (static_cast<int>(points[i].size()) != d)
      throw std::invalid_argument("materialize_det: point dimension mismatch");
    for (std::size_t j = i + 1; j < points.size(); ++j)
      min_gap = std::min(min_gap, dist(points[i], points[j]));
  }
  if (min_gap < 1e-9)
    throw std::invalid_argument("materialize_det: query points too close (gap < 1e-9)");
  inst.r = std::isfinite(min_gap) ? min_gap / 4.0 : 0.25;

  // v: first basis direction surviving twice-re-orthogonalized Gram-Schmidt
  // against {e_1, x_1, ..., x_T}
  std::vector<Vec> basis{unit_basis(d, 0)};
  for (const Vec& p : points) {
    Vec w = p;
    detail::orthogonalize(w, basis);
    const double n = norm(w);
    if (n > 1e-10) basis.push_back(scale(w, 1.0 / n));
  }
  for (int i = 1; i < d; ++i) {
    Vec w = unit_basis(d, i);
    detail::orthogonalize(w, basis);
    const double n = norm(w);
    if (n > 1e-8) {
      w = scale(w, 1.0 / n);
      detail::orthogonalize(w, basis);
      inst.v = scale(w, 1.0 / norm(w));
      break;
    }
  }
  if (inst.v.empty()) throw std::runtime_error("materialize_det: no orthogonal direction found");
  return inst;
}

struct NonstationarityEvidence {
  double min_sampled_norm = std::numeric_limits<double>::infinity();
  int samples = 0;
};

// Samples random convex combinations
//   u = (l1 + l2 ||x||^2) v + 2 l2 ((v - e_1).x) x + l2 (1 - ||x||^2) e_1,
// the canonical parameterization of every attainable convex combination of
// gradients of h, and checks ||u|| > 1/36 on each. Falsification evidence,
// not a proof.
inline NonstationarityEvidence nonstationarity_evidence_det(const HardInstanceDet& inst, int M,
                                                            uint64_t seed) {
  if (M < 1) throw std::invalid_argument("nonstationarity_evidence_det: M must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int d = inst.d;
  NonstationarityEvidence ev;
  ev.samples = M;
  for (int m = 0; m < M; ++m) {
    Vec x(d);
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) {
      x[i] = gauss(rng);
      n2 += x[i] * x[i];
    }
    const double radius = std::pow(unif(rng), 1.0 / d) / std::sqrt(std::max(n2, 1e-300));
    for (double& c : x) c *= radius;
    const double l2 = unif(rng);
    const double l1 = 1.0 - l2;
    const double x2 = dot(x, x);
    Vec u = scale(inst.v, l1 + l2 * x2);
    u = axpy(u, 2.0 * l2 * (dot(inst.v, x) - x[0]), x);
    u[0] += l2 * (1.0 - x2);
    const double un = norm(u);
    if (un <= 1.0 / 36.0)
      throw std::runtime_error("nonstationarity evidence violated: sampled hull norm " +
                               std::to_string(un));
    ev.min_sampled_norm = std::min(ev.min_sampled_norm, un);
  }
  return ev;
}

// The 1-D function behind ResistingOracleGradOnly's answers: linear with
// slope 1 across [xhat - delta - eta, xhat + delta + eta] (so the Goldstein
// delta-subdifferential at xhat is exactly {1}), constant plateaus at
// +/-(delta + eta) outside, and a narrow slope-+/-1 bump at every queried
// point on a plateau so the recorded derivative stays 1 there. Image within
// [-1, 1], globally 1-Lipschitz.
struct HardInstance1D {
  std::vector<double> queried;
  double xhat = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double r = 0.0;

  double eval(double x) const {
    const double hi = xhat + delta + eta, lo = xhat - delta - eta;
    if (x >= lo && x <= hi) return x - xhat;
    if (x > hi) {
      const double base = delta + eta;
      for (double q : queried) {
        if (q <= hi) continue;
        if (x >= q - r && x <= q + r / 2.0) {
          if (x <= q - r / 4.0) return base - (x - (q - r));
          return base - 0.75 * r + (x - (q - r / 4.0));
        }
      }
      return base;
    }
    const double base = -(delta + eta);
    for (double q : queried) {
      if (q >= lo) continue;
      if (x >= q - r / 2.0 && x <= q + r) {
        if (x <= q + r / 4.0) return base + (x - (q - r / 2.0));
        return base + 0.75 * r - (x - (q + r / 4.0));
      }
    }
    return base;
  }

  double deriv(double x) const {
    const double hi = xhat + delta + eta, lo = xhat - delta - eta;
    if (x >= lo && x <= hi) return 1.0;
    if (x > hi) {
      for (double q : queried) {
        if (q <= hi) continue;
        if (x >= q - r && x <= q + r / 2.0) return x <= q - r / 4.0 ? -1.0 : 1.0;
      }
      return 0.0;
    }
    for (double q : queried) {
      if (q >= lo) continue;
      if (x >= q - r / 2.0 && x <= q + r) return x <= q + r / 4.0 ? 1.0 : -1.0;
    }
    return 0.0;
  }
};

// Picks eta by scanning {2^{-k}(1-delta)/2} for the first value keeping
// xhat +/- (delta+eta) off the queried set, then sizes the bump radius from
// the min gap of the queried points plus the plateau boundaries.
inline HardInstance1D materialize_1d(const std::vector<double>& queried, double xhat,
                                     double delta) {
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("materialize_1d: delta must be in (0, 1)");
  HardInstance1D inst;
  inst.queried = queried;
  inst.xhat = xhat;
  inst.delta = delta;
  double eta = 0.0;
  for (int k = 1; k < 1024; ++k) {
    const double cand = std::ldexp((1.0 - delta) / 2.0, -k);
    bool clash = false;
    for (double q : queried)
      if (q == xhat + delta + cand || q == xhat - delta - cand) clash = true;
    if (!clash && cand > 0.0) {
      eta = cand;
      break;
    }
  }
  if (eta == 0.0) throw std::runtime_error("materialize_1d: no valid eta found");
  inst.eta = eta;

  std::vector<double> qbar = queried;
  qbar.push_back(xhat - delta - eta);
  qbar.push_back(xhat + delta + eta);
  std::sort(qbar.begin(), qbar.end());
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < qbar.size(); ++i)
    min_gap = std::min(min_gap, qbar[i] - qbar[i - 1]);
  if (min_gap < 1e-9)
    throw std::invalid_argument("materialize_1d: queried points too close (gap < 1e-9)");
  inst.r = std::min(std::isfinite(min_gap) ? min_gap / 10.0 : delta, delta);
  return inst;
}

struct IterateEvidence {
  Vec x;
  double f = 0.0;
  double clip_margin = 0.0;  // f(x) - (-Delta + L*delta); > 0 keeps B_delta unclipped
  bool nonstationary = false;
};

struct AttackReport {
  bool consistent = false;
  std::vector<IterateEvidence> iterates;
  double min_sampled_hull_norm = 0.0;
  SolverStatus solver_status = SolverStatus::OuterBudgetExhausted;
  int queries = 0;
  bool all_iterates_nonstationary = false;
};

inline nlohmann::json to_json(const AttackReport& rep) {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& it : rep.iterates)
    its.push_back({{"x", it.x},
                   {"f", it.f},
                   {"cert_evidence",
                    {{"clip_margin", it.clip_margin}, {"nonstationary", it.nonstationary}}}});
  return nlohmann::json{{"consistent", rep.consistent},
                        {"iterates", its},
                        {"min_sampled_hull_norm", rep.min_sampled_hull_norm},
                        {"queries", rep.queries},
                        {"solver_status", to_string(rep.solver_status)},
                        {"all_iterates_nonstationary", rep.all_iterates_nonstationary}};
}

inline std::vector<Vec> distinct_points(const OracleTranscript& t) {
  std::vector<Vec> pts;
  for (const auto& [x, r] : t.queries) {
    bool seen = false;
    for (const Vec& p : pts)
      if (p == x) seen = true;
    if (!seen) pts.push_back(x);
  }
  return pts;
}

enum class AttackAlgo { Det, RandLineSample, Sgd };

// Runs the chosen solver against the full first-order resisting oracle,
// materializes the consistent hard function from the transcript, replays
// every recorded answer against it, and attaches per-iterate
// non-stationarity evidence: whenever f(x) > -Delta + L*delta the whole
// delta-ball avoids the clipped region, so the Goldstein subdifferential is
// (L/7) times the hull of gradients of h, whose norm exceeds (L/7)/36.
inline AttackReport attack_det(AttackAlgo algo, int d, int budget, double delta, double epsilon,
                               double L, double Delta, uint64_t seed, int evidence_samples,
                               HardInstanceDet* out_instance = nullptr,
                               std::vector<Vec>* out_iterates_full = nullptr) {
  if (budget > d - 2) throw std::invalid_argument("attack_det: budget must be <= d-2");
  ResistingOracleDet oracle(d, L);
  oracle.set_budget(budget);

  SolverConfig cfg;
  cfg.delta = delta;
  cfg.epsilon = epsilon;
  cfg.L = L;
  cfg.Delta = Delta;

  const Vec x0(d, 0.0);
  SolverResult run;
  switch (algo) {
    case AttackAlgo::Det: run = deterministic_goldstein_sg(oracle, x0, cfg); break;
    case AttackAlgo::RandLineSample: run = randomized_goldstein_sg(oracle, x0, cfg, seed); break;
    case AttackAlgo::Sgd:
      run = sgd_on_uniform_smoothing(oracle, x0, delta, epsilon, budget, delta, seed);
      break;
  }

  const std::vector<Vec> points = distinct_points(oracle.transcript());
  HardInstanceDet inst = materialize_det(points, d, L, Delta);

  AttackReport rep;
  rep.solver_status = run.status;
  rep.queries = oracle.call_count();
  rep.consistent = true;
  for (const auto& [x, resp] : oracle.transcript().queries) {
    if (std::abs(inst.eval(x) - *resp.value) > 1e-9) rep.consistent = false;
    if (dist(inst.grad(x), resp.gradient) > 1e-9) rep.consistent = false;
  }

  rep.all_iterates_nonstationary = true;
  std::vector<Vec> evaluated = run.iterates;
  evaluated.push_back(run.point);
  for (const Vec& x : evaluated) {
    IterateEvidence ev;
    ev.x = x;
    ev.f = inst.eval(x);
    ev.clip_margin = ev.f - (-Delta + L * delta);
    ev.nonstationary = ev.clip_margin > 0.0 && epsilon < L / 252.0;
    if (!ev.nonstationary) rep.all_iterates_nonstationary = false;
    rep.iterates.push_back(std::move(ev));
  }

  rep.min_sampled_hull_norm =
      nonstationarity_evidence_det(inst, evidence_samples, seed ^ 0xda3e39cb94b95bdbull)
          .min_sampled_norm;
  if (out_instance) *out_instance = inst;
  if (out_iterates_full) *out_iterates_full = run.iterates;
  return rep;
}

struct AttackReport1D {
  bool consistent = false;
  double xhat = 0.0;
  double cert_norm = 1.0;  // the analytic min-norm over the delta-ball at xhat
  int queries = 0;
  HardInstance1D instance;
};

inline nlohmann::json to_json(const AttackReport1D& rep) {
  return nlohmann::json{{"consistent", rep.consistent},
                        {"xhat", rep.xhat},
                        {"cert_norm", rep.cert_norm},
                        {"queries", rep.queries},
                        {"eta", rep.instance.eta},
                        {"r", rep.instance.r}};
}

// Runs the deterministic gradient-only baseline against the 1-D resisting
// oracle for T queries, then materializes a consistent 1-Lipschitz function
// whose Goldstein delta-subdifferential at the returned point is exactly
// {1}.
inline AttackReport1D attack_grad_only(int T, double delta, double epsilon) {
  if (epsilon >= 1.0) throw std::invalid_argument("attack_grad_only: needs epsilon < 1");
  ResistingOracleGradOnly oracle(T);
  SolverResult run = normalized_gradient_descent(oracle, Vec{0.0}, delta, epsilon, 4 * T + 8);

  std::vector<double> queried;
  for (const auto& [x, r] : oracle.transcript().queries) queried.push_back(x[0]);
  const double xhat = run.point[0];

  AttackReport1D rep;
  rep.instance = materialize_1d(queried, xhat, delta);
  rep.xhat = xhat;
  rep.queries = oracle.call_count();
  rep.consistent = true;
  for (double q : queried)
    if (std::abs(rep.instance.deriv(q) - 1.0) > 1e-9) rep.consistent = false;
  rep.cert_norm = 1.0;
  return rep;
}

}  // namespace goldstein
