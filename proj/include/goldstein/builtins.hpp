#pragma once

// Catalog of named builtin circuits used by the CLI and the benchmark
// harness: abs1d, maxlin-k, relu-reg-n and deep-chain-k.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "goldstein/circuit.hpp"

namespace goldstein {

struct BuiltinInstance {
  std::string name;
  CircuitDef def;
  Vec x0;              // canonical starting point (inputs ++ biases)
  double diam = 2.0;   // suggested region diameter for bound analysis
};

namespace detail {

// Incremental circuit construction with automatic ids.
class CircuitBuilder {
 public:
  int input(int index) { return push(NodeOp::Input, index, 0.0, {}); }
  int bias(int index) { return push(NodeOp::Bias, index, 0.0, {}); }
  int constant(double c) { return push(NodeOp::Const, -1, c, {}); }
  int add(int a, int b) { return push(NodeOp::Add, -1, 0.0, {a, b}); }
  int mul(int a, int b) { return push(NodeOp::Mul, -1, 0.0, {a, b}); }
  int relu(int a) { return push(NodeOp::Relu, -1, 0.0, {a}); }
  int output(int a) { return push(NodeOp::Output, -1, 0.0, {a}); }
  CircuitDef take() { return std::move(def_); }

 private:
  int push(NodeOp op, int index, double c, std::vector<int> preds) {
    const int id = next_id_++;
    CircuitDef::NodeDef n;
    n.id = id;
    n.op = op;
    n.index = index;
    n.c = c;
    n.preds = std::move(preds);
    def_.nodes.push_back(std::move(n));
    return id;
  }
  CircuitDef def_;
  int next_id_ = 0;
};

}  // namespace detail

// |x| as relu(x + b1) + relu(-x + b2), exact at b = 0. Dimension 3.
inline BuiltinInstance builtin_abs1d() {
  detail::CircuitBuilder b;
  const int x = b.input(0);
  const int b1 = b.bias(0), b2 = b.bias(1);
  const int neg = b.constant(-1.0);
  const int negx = b.mul(x, neg);
  const int r1 = b.relu(b.add(x, b1));
  const int r2 = b.relu(b.add(negx, b2));
  b.output(b.add(r1, r2));
  BuiltinInstance inst;
  inst.name = "abs1d";
  inst.def = b.take();
  inst.x0 = Vec{1.0, 0.0, 0.0};
  return inst;
}

// max of k linear pieces c_j * x via the running-max chain
//   m_{j+1} = m_j + relu(c_{j+1} x - m_j + b_j),
// exact at b = 0. The first slope is 0 so the function is bounded below.
inline BuiltinInstance builtin_maxlin(int k) {
  if (k < 2 || k > 64) throw std::invalid_argument("maxlin-k: k must be in [2, 64]");
  static const double base_slopes[] = {0.0, 0.5, -0.5, 1.0, -1.0};
  std::vector<double> slopes;
  for (int j = 0; j < k; ++j)
    slopes.push_back(j < 5 ? base_slopes[j] : ((j % 2 == 0 ? 1.0 : -1.0) * (j - 3.0) / k));
  detail::CircuitBuilder b;
  const int x = b.input(0);
  const int neg = b.constant(-1.0);
  int m = b.mul(x, b.constant(slopes[0]));
  for (int j = 1; j < k; ++j) {
    const int cx = b.mul(x, b.constant(slopes[j]));
    const int arg = b.add(b.add(cx, b.mul(m, neg)), b.bias(j - 1));
    m = b.add(m, b.relu(arg));
  }
  b.output(m);
  BuiltinInstance inst;
  inst.name = "maxlin-" + std::to_string(k);
  inst.def = b.take();
  inst.x0 = Vec(k, 0.0);  // 1 input + (k-1) biases
  inst.x0[0] = 1.0;
  return inst;
}

// One-neuron relu regression on n fixed data points:
//   f(w, b_1..b_n) = sum_i (relu(x_i w + b_i) - y_i)^2,
// x_i = (i+1)/n, y_i = i/(2n). Dimension 1 + n.
inline BuiltinInstance builtin_relu_reg(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument("relu-reg-n: n must be in [1, 64]");
  detail::CircuitBuilder b;
  const int w = b.input(0);
  int total = -1;
  for (int i = 0; i < n; ++i) {
    const double xi = static_cast<double>(i + 1) / n;
    const double yi = static_cast<double>(i) / (2.0 * n);
    const int r = b.relu(b.add(b.mul(w, b.constant(xi)), b.bias(i)));
    const int diff = b.add(r, b.constant(-yi));
    const int sq = b.mul(diff, diff);
    total = (total < 0) ? sq : b.add(total, sq);
  }
  b.output(total);
  BuiltinInstance inst;
  inst.name = "relu-reg-" + std::to_string(n);
  inst.def = b.take();
  inst.x0 = Vec(1 + n, 0.0);
  inst.x0[0] = 1.0;
  return inst;
}

// k stacked relu layers relu(... relu(x + b_1) ... + b_k); exercises the
// exponential growth of the recursive bounds. Dimension 1 + k.
inline BuiltinInstance builtin_deep_chain(int k) {
  if (k < 1 || k > 64) throw std::invalid_argument("deep-chain-k: k must be in [1, 64]");
  detail::CircuitBuilder b;
  int cur = b.input(0);
  for (int j = 0; j < k; ++j) cur = b.relu(b.add(cur, b.bias(j)));
  b.output(cur);
  BuiltinInstance inst;
  inst.name = "deep-chain-" + std::to_string(k);
  inst.def = b.take();
  inst.x0 = Vec(1 + k, 0.0);
  inst.x0[0] = 1.0;
  return inst;
}

inline BuiltinInstance builtin_instance(const std::string& name) {
  auto suffix_int = [&](const std::string& prefix) {
    return std::stoi(name.substr(prefix.size()));
  };
  if (name == "abs1d") return builtin_abs1d();
  if (name.rfind("maxlin-", 0) == 0) return builtin_maxlin(suffix_int("maxlin-"));
  if (name.rfind("relu-reg-", 0) == 0) return builtin_relu_reg(suffix_int("relu-reg-"));
  if (name.rfind("deep-chain-", 0) == 0) return builtin_deep_chain(suffix_int("deep-chain-"));
  throw std::invalid_argument("unknown builtin circuit: " + name);
}

inline std::vector<std::string> builtin_names() {
  return {"abs1d", "maxlin-5", "relu-reg-1", "relu-reg-2", "relu-reg-4", "deep-chain-2",
          "deep-chain-3"};
}

}  // namespace goldstein
