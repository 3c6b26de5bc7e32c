#pragma once

// First-order oracle abstraction shared by solvers, certifiers and
// adversaries: one query returns (value, gradient), costs 1, and is logged
// into an append-only transcript. Gradient-only oracles omit the value.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "goldstein/circuit.hpp"
#include "goldstein/smoothing.hpp"

namespace goldstein {

struct OracleResponse {
  std::optional<double> value;  // absent under gradient-only capability
  Vec gradient;
};

struct OracleTranscript {
  std::vector<std::pair<Vec, OracleResponse>> queries;
  int call_count() const { return static_cast<int>(queries.size()); }
};

class BudgetExceededError : public std::runtime_error {
 public:
  explicit BudgetExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

class Oracle {
 public:
  virtual ~Oracle() = default;

  OracleResponse query(const Vec& x) {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("oracle: point dimension mismatch");
    if (budget_ >= 0 && transcript_.call_count() >= budget_) on_budget_exceeded();
    OracleResponse r = answer(x);
    transcript_.queries.emplace_back(x, r);
    return r;
  }

  virtual int dim() const = 0;
  virtual bool has_values() const { return true; }

  // Optional hard cap on query count; negative means unlimited.
  void set_budget(int max_calls) { budget_ = max_calls; }
  int budget() const { return budget_; }
  int call_count() const { return transcript_.call_count(); }
  const OracleTranscript& transcript() const { return transcript_; }

 protected:
  virtual OracleResponse answer(const Vec& x) = 0;
  virtual void on_budget_exceeded() {
    throw BudgetExceededError("oracle budget of " + std::to_string(budget_) + " calls exceeded");
  }

 private:
  OracleTranscript transcript_;
  int budget_ = -1;
};

class CircuitOracle final : public Oracle {
 public:
  explicit CircuitOracle(Circuit circuit) : circuit_(std::move(circuit)) {}
  int dim() const override { return circuit_.dim(); }

 protected:
  OracleResponse answer(const Vec& x) override {
    return OracleResponse{circuit_.eval(x), circuit_.grad(x)};
  }

 private:
  Circuit circuit_;
};

class SmoothedCircuitOracle final : public Oracle {
 public:
  explicit SmoothedCircuitOracle(SmoothedCircuit sc) : sc_(std::move(sc)) {}
  int dim() const override { return sc_.dim(); }
  const SmoothedCircuit& circuit() const { return sc_; }

 protected:
  OracleResponse answer(const Vec& x) override {
    return OracleResponse{sc_.eval(x), sc_.grad(x)};
  }

 private:
  SmoothedCircuit sc_;
};

// Closed-form function oracle.
class FunctionOracle final : public Oracle {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  FunctionOracle(int dim, ValueFn f, GradFn g)
      : dim_(dim), f_(std::move(f)), g_(std::move(g)) {}
  int dim() const override { return dim_; }

 protected:
  OracleResponse answer(const Vec& x) override { return OracleResponse{f_(x), g_(x)}; }

 private:
  int dim_;
  ValueFn f_;
  GradFn g_;
};

// Capability restriction: same gradients, values hidden. Counting happens on
// this wrapper; the inner oracle's transcript also records the query.
class GradientOnlyOracle final : public Oracle {
 public:
  explicit GradientOnlyOracle(Oracle& inner) : inner_(inner) {}
  int dim() const override { return inner_.dim(); }
  bool has_values() const override { return false; }

 protected:
  OracleResponse answer(const Vec& x) override {
    OracleResponse r = inner_.query(x);
    r.value.reset();
    return r;
  }

 private:
  Oracle& inner_;
};

// Transcript export: CSV with columns iter, x_0..x_{d-1}, value, g_0..g_{d-1}.
inline void write_transcript_csv(std::ostream& os, const OracleTranscript& t, int dim) {
  os << "iter";
  for (int i = 0; i < dim; ++i) os << ",x_" << i;
  os << ",value";
  for (int i = 0; i < dim; ++i) os << ",g_" << i;
  os << "\n";
  os.precision(17);
  int iter = 0;
  for (const auto& [x, r] : t.queries) {
    os << iter++;
    for (double v : x) os << "," << v;
    os << ",";
    if (r.value) os << *r.value;
    for (double v : r.gradient) os << "," << v;
    os << "\n";
  }
}

}  // namespace goldstein
