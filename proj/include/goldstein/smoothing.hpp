#pragma once

// Deterministic smoothing of a circuit by rewriting every relu gate into a
// softrelu gate with half-width a, plus selection of a from the target
// stationarity/accuracy parameters and the recursive (L, G) bounds.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "goldstein/circuit.hpp"

namespace goldstein {

// softrelu_a(z): 0 below -a, (z+a)^2/(4a) on [-a, a), z above a. Equals the
// average of relu(z + xi) for xi uniform on [-a, a]; continuously
// differentiable, 1-Lipschitz, 1/(2a)-smooth.
inline double softrelu(double z, double a) {
  if (a <= 0.0) throw std::invalid_argument("softrelu: half-width must be positive");
  if (z >= a) return z;
  if (z < -a) return 0.0;
  return (z + a) * (z + a) / (4.0 * a);
}

inline double softrelu_deriv(double z, double a) {
  if (a <= 0.0) throw std::invalid_argument("softrelu: half-width must be positive");
  return std::clamp((z + a) / (2.0 * a), 0.0, 1.0);
}

struct SmoothingParams {
  double a = 0.0;       // softrelu half-width; derived when not supplied
  double gamma = 0.0;   // target sup-norm error
  double delta = 0.0;   // target stationarity radius
  double epsilon = 0.0; // target stationarity norm
};

struct HalfWidthSelection {
  double a = 0.0;
  double log_a = 0.0;           // natural log, exact even when a underflows
  bool bounds_vacuous = false;  // exponent overflowed; a floored at 1e-300
};

// a = min{eps, delta, gamma} / (160 L G)^{3 s}, computed in log-space.
// L and G are clamped up to 1 before exponentiation.
inline HalfWidthSelection select_half_width(double L, double G, int size, double delta,
                                            double epsilon, double gamma) {
  if (delta <= 0 || epsilon <= 0 || gamma <= 0)
    throw std::invalid_argument("select_half_width: targets must be positive");
  if (size < 0) throw std::invalid_argument("select_half_width: negative size");
  const double Lc = std::max(L, 1.0), Gc = std::max(G, 1.0);
  const double target = std::min({epsilon, delta, gamma});
  const double exponent = 3.0 * size * std::log(160.0 * Lc * Gc);
  HalfWidthSelection sel;
  sel.log_a = std::log(target) - exponent;
  sel.bounds_vacuous = static_cast<double>(size) * std::log(160.0 * Lc * Gc) > 700.0;
  sel.a = std::max(std::exp(sel.log_a), 1e-300);
  return sel;
}

// Structurally the base circuit with every relu interpreted as softrelu(a).
class SmoothedCircuit {
 public:
  SmoothedCircuit(Circuit base, SmoothingParams params, BoundAnalysis bounds)
      : base_(std::move(base)), params_(params), bounds_(std::move(bounds)) {}

  const Circuit& base() const { return base_; }
  const SmoothingParams& params() const { return params_; }
  const BoundAnalysis& bounds() const { return bounds_; }
  double half_width() const { return params_.a; }
  int dim() const { return base_.dim(); }

  double eval(const Vec& x) const { return base_.eval_soft(x, params_.a); }
  Vec grad(const Vec& x) const { return base_.grad_soft(x, params_.a); }

 private:
  Circuit base_;
  SmoothingParams params_;
  BoundAnalysis bounds_;
};

// Rewrites relu -> softrelu(a). When params.a == 0 the half-width is derived
// from the circuit's recursive (L, G) bounds via select_half_width. The
// returned BoundAnalysis carries the per-node S_i recursion plus the
// log-space certified totals
//   gamma_n <= a (2G)^s,  S_n <= (2L/a)(2G)^s,
//   delta_n <= a (40 L G)^s,  eps_n <= a (160 L G)^{3s}.
inline SmoothedCircuit smooth(const Circuit& circuit, SmoothingParams params,
                              double region_diameter) {
  BoundAnalysis hard = circuit.analyze_bounds(region_diameter);
  if (params.a <= 0.0) {
    if (params.delta <= 0 || params.epsilon <= 0 || params.gamma <= 0)
      throw std::invalid_argument("smooth: need (delta, epsilon, gamma) or an explicit half-width");
    params.a = select_half_width(hard.L_out, hard.G_out, circuit.size(), params.delta,
                                 params.epsilon, params.gamma)
                   .a;
  }
  BoundAnalysis ba = circuit.analyze_bounds(region_diameter, params.a);
  const double Lc = std::max(hard.L_out, 1.0), Gc = std::max(hard.G_out, 1.0);
  const double s = circuit.size();
  const double log_a = std::log(params.a);
  ba.log_gamma_bound = log_a + s * std::log(2.0 * Gc);
  ba.log_S_bound = std::log(2.0 * Lc) - log_a + s * std::log(2.0 * Gc);
  ba.log_delta_bound = log_a + s * std::log(40.0 * Lc * Gc);
  ba.log_eps_bound = log_a + 3.0 * s * std::log(160.0 * Lc * Gc);
  return SmoothedCircuit(circuit, params, std::move(ba));
}

}  // namespace goldstein
