#pragma once

// Neural arithmetic circuits: a DAG of input / bias / const / add / mul /
// relu / output nodes computing a scalar function of (inputs ++ biases).
// Provides structural validation, forward evaluation, reverse-mode
// differentiation and the recursive Lipschitz/boundedness calculus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goldstein/linalg.hpp"

namespace goldstein {

enum class NodeOp { Input, Bias, Const, Add, Mul, Relu, Output };

inline const char* to_string(NodeOp op) {
  switch (op) {
    case NodeOp::Input: return "input";
    case NodeOp::Bias: return "bias";
    case NodeOp::Const: return "const";
    case NodeOp::Add: return "add";
    case NodeOp::Mul: return "mul";
    case NodeOp::Relu: return "relu";
    case NodeOp::Output: return "output";
  }
  return "?";
}

inline NodeOp node_op_from_string(const std::string& s) {
  if (s == "input") return NodeOp::Input;
  if (s == "bias") return NodeOp::Bias;
  if (s == "const") return NodeOp::Const;
  if (s == "add") return NodeOp::Add;
  if (s == "mul") return NodeOp::Mul;
  if (s == "relu") return NodeOp::Relu;
  if (s == "output") return NodeOp::Output;
  throw std::invalid_argument("unknown node kind: " + s);
}

// Raw, possibly-invalid circuit description. This is what the JSON file
// format maps onto; validation and compilation happen separately.
struct CircuitDef {
  struct NodeDef {
    int id = -1;
    NodeOp op = NodeOp::Const;
    int index = -1;   // slot for input/bias nodes
    double c = 0.0;   // value for const nodes
    std::vector<int> preds;  // predecessor node ids
  };
  std::vector<NodeDef> nodes;
};

struct Violation {
  int node_id;     // -1 for whole-graph violations
  int condition;   // 1..6 per the structural conditions, 0 for graph-level
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& v : violations)
      os << "node " << v.node_id << " [condition " << v.condition << "]: " << v.message << "\n";
    return os.str();
  }
};

class CircuitError : public std::runtime_error {
 public:
  explicit CircuitError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void add_violation(ValidationReport& r, int id, int cond, std::string msg) {
  r.violations.push_back({id, cond, std::move(msg)});
}

}  // namespace detail

inline ValidationReport validate(const CircuitDef& def) {
  using detail::add_violation;
  ValidationReport rep;

  std::map<int, int> pos;  // id -> position in def.nodes
  for (int i = 0; i < static_cast<int>(def.nodes.size()); ++i) {
    const auto& n = def.nodes[i];
    if (n.id < 0) add_violation(rep, n.id, 0, "negative node id");
    if (pos.count(n.id)) add_violation(rep, n.id, 0, "duplicate node id");
    pos[n.id] = i;
  }
  if (def.nodes.empty()) {
    add_violation(rep, -1, 0, "empty circuit");
    return rep;
  }

  // predecessor references must resolve
  bool refs_ok = true;
  for (const auto& n : def.nodes)
    for (int p : n.preds)
      if (!pos.count(p)) {
        add_violation(rep, n.id, 0, "predecessor id " + std::to_string(p) + " does not exist");
        refs_ok = false;
      }
  if (!refs_ok) return rep;

  std::map<int, int> out_degree;
  for (const auto& n : def.nodes) out_degree[n.id] = 0;
  for (const auto& n : def.nodes)
    for (int p : n.preds) out_degree[p]++;

  int num_inputs = 0, num_biases = 0, num_relus = 0, num_outputs = 0;
  for (const auto& n : def.nodes) {
    const int in_deg = static_cast<int>(n.preds.size());
    switch (n.op) {
      case NodeOp::Input:
        ++num_inputs;
        if (in_deg != 0) add_violation(rep, n.id, 1, "input node must have 0 incoming edges");
        break;
      case NodeOp::Bias:
        ++num_biases;
        if (in_deg != 0) add_violation(rep, n.id, 2, "bias node must have 0 incoming edges");
        if (out_degree[n.id] != 1)
          add_violation(rep, n.id, 2, "bias node must have exactly 1 outgoing edge");
        break;
      case NodeOp::Const:
        if (in_deg != 0) add_violation(rep, n.id, 4, "const node must have 0 incoming edges");
        if (!(n.c >= -1.0 && n.c <= 1.0))
          add_violation(rep, n.id, 4, "const value must lie in [-1, 1]");
        break;
      case NodeOp::Add:
      case NodeOp::Mul:
        if (in_deg != 2)
          add_violation(rep, n.id, 3, "add/mul node must have exactly 2 incoming edges");
        break;
      case NodeOp::Relu:
        ++num_relus;
        if (in_deg != 1) add_violation(rep, n.id, 5, "relu node must have exactly 1 incoming edge");
        break;
      case NodeOp::Output:
        ++num_outputs;
        if (in_deg != 1) add_violation(rep, n.id, 6, "output node must have exactly 1 incoming edge");
        if (out_degree[n.id] != 0)
          add_violation(rep, n.id, 6, "output node must have 0 outgoing edges");
        break;
    }
  }

  if (num_inputs < 1) add_violation(rep, -1, 1, "circuit must have at least one input node");
  if (num_outputs != 1) add_violation(rep, -1, 6, "circuit must have exactly one output node");
  if (num_biases != num_relus)
    add_violation(rep, -1, 2,
                  "bias count (" + std::to_string(num_biases) + ") must equal relu count (" +
                      std::to_string(num_relus) + ")");

  // Every relu must be fed by an add gate with a bias predecessor, and no
  // two relus may share a bias.
  std::set<int> biases_seen;
  for (const auto& n : def.nodes) {
    if (n.op != NodeOp::Relu || n.preds.size() != 1) continue;
    const auto& pred = def.nodes[pos.at(n.preds[0])];
    if (pred.op != NodeOp::Add) {
      add_violation(rep, n.id, 5, "relu predecessor must be an add gate");
      continue;
    }
    int bias_id = -1;
    for (int p : pred.preds)
      if (def.nodes[pos.at(p)].op == NodeOp::Bias) bias_id = p;
    if (bias_id < 0) {
      add_violation(rep, n.id, 5, "relu's add gate has no bias predecessor");
    } else if (!biases_seen.insert(bias_id).second) {
      add_violation(rep, n.id, 5,
                    "bias node " + std::to_string(bias_id) + " is shared by more than one relu");
    }
  }

  // slot indices: contiguous 0-based per kind
  auto check_slots = [&](NodeOp op, int count, const char* what) {
    std::set<int> seen;
    for (const auto& n : def.nodes) {
      if (n.op != op) continue;
      if (n.index < 0 || n.index >= count)
        add_violation(rep, n.id, 0, std::string(what) + " slot index out of range");
      else if (!seen.insert(n.index).second)
        add_violation(rep, n.id, 0, std::string(what) + " slot index duplicated");
    }
  };
  check_slots(NodeOp::Input, num_inputs, "input");
  check_slots(NodeOp::Bias, num_biases, "bias");

  // acyclicity via Kahn
  {
    std::map<int, int> remaining;
    std::map<int, std::vector<int>> succs;
    for (const auto& n : def.nodes) remaining[n.id] = static_cast<int>(n.preds.size());
    for (const auto& n : def.nodes)
      for (int p : n.preds) succs[p].push_back(n.id);
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (const auto& [id, deg] : remaining)
      if (deg == 0) ready.push(id);
    int emitted = 0;
    while (!ready.empty()) {
      int id = ready.top();
      ready.pop();
      ++emitted;
      for (int s : succs[id])
        if (--remaining[s] == 0) ready.push(s);
    }
    if (emitted != static_cast<int>(def.nodes.size()))
      add_violation(rep, -1, 0, "graph contains a cycle");
  }

  return rep;
}

// Per-node Lipschitz (L), value (G) and, for smoothed circuits, gradient
// Lipschitz (S) bounds propagated by the fixed composition rules.
struct BoundAnalysis {
  double region_diameter = 0.0;
  Vec L, G, S;           // indexed by topo position; S empty unless smoothed
  double L_out = 0.0, G_out = 0.0, S_out = 0.0;
  bool has_smoothness = false;
  // log-space certified totals for a smoothed circuit (see smoothing.hpp)
  double log_gamma_bound = 0.0, log_S_bound = 0.0, log_delta_bound = 0.0, log_eps_bound = 0.0;
};

// Immutable compiled circuit. The topological order is fixed once at
// construction (Kahn's algorithm, smallest-id tie-break) and reused by
// every evaluation.
class Circuit {
 public:
  static Circuit compile(const CircuitDef& def) {
    ValidationReport rep = validate(def);
    if (!rep.ok()) throw CircuitError("invalid circuit:\n" + rep.to_string());
    return Circuit(def);
  }

  const CircuitDef& definition() const { return def_; }
  int num_inputs() const { return num_inputs_; }
  int num_biases() const { return num_biases_; }
  int dim() const { return num_inputs_ + num_biases_; }
  int size() const { return static_cast<int>(def_.nodes.size()); }
  const std::vector<int>& topo_order() const { return topo_ids_; }

  double eval(const Vec& x) const { return eval_soft(x, 0.0); }
  Vec grad(const Vec& x) const { return grad_soft(x, 0.0); }

  // softrelu_a evaluation; a == 0 means the hard relu with the derivative-0
  // convention at pre-activation exactly 0.
  double eval_soft(const Vec& x, double a) const {
    Vec vals;
    forward(x, a, vals);
    return vals[output_pos_];
  }

  Vec grad_soft(const Vec& x, double a) const {
    Vec vals;
    forward(x, a, vals);
    const int n = size();
    Vec adj(n, 0.0);
    adj[output_pos_] = 1.0;
    Vec g(dim(), 0.0);
    for (auto it = topo_pos_.rbegin(); it != topo_pos_.rend(); ++it) {
      const int i = *it;
      const auto& node = def_.nodes[i];
      const double ai = adj[i];
      if (ai == 0.0 && node.op != NodeOp::Input && node.op != NodeOp::Bias) continue;
      switch (node.op) {
        case NodeOp::Input: g[node.index] += ai; break;
        case NodeOp::Bias: g[num_inputs_ + node.index] += ai; break;
        case NodeOp::Const: break;
        case NodeOp::Add:
          adj[pos(node.preds[0])] += ai;
          adj[pos(node.preds[1])] += ai;
          break;
        case NodeOp::Mul:
          adj[pos(node.preds[0])] += ai * vals[pos(node.preds[1])];
          adj[pos(node.preds[1])] += ai * vals[pos(node.preds[0])];
          break;
        case NodeOp::Relu: {
          const double z = vals[pos(node.preds[0])];
          adj[pos(node.preds[0])] += ai * relu_deriv(z, a);
          break;
        }
        case NodeOp::Output: adj[pos(node.preds[0])] += ai; break;
      }
    }
    return g;
  }

  // Pre-activation values of every relu gate, in topo order of the relus.
  Vec relu_preactivations(const Vec& x) const {
    Vec vals;
    forward(x, 0.0, vals);
    Vec z;
    for (int i : topo_pos_)
      if (def_.nodes[i].op == NodeOp::Relu) z.push_back(vals[pos(def_.nodes[i].preds[0])]);
    return z;
  }

  // One pass of the Assumption-5.1 composition rules. softrelu_a > 0
  // additionally populates the per-node smoothness bounds S_i.
  BoundAnalysis analyze_bounds(double region_diameter, double softrelu_a = 0.0) const {
    if (region_diameter < 0) throw std::invalid_argument("region_diameter must be >= 0");
    const int n = size();
    BoundAnalysis ba;
    ba.region_diameter = region_diameter;
    ba.L.assign(n, 0.0);
    ba.G.assign(n, 0.0);
    ba.has_smoothness = softrelu_a > 0.0;
    if (ba.has_smoothness) ba.S.assign(n, 0.0);
    for (int i : topo_pos_) {
      const auto& node = def_.nodes[i];
      double L = 0, G = 0, S = 0;
      switch (node.op) {
        case NodeOp::Input:
        case NodeOp::Bias:
          L = 1.0;
          G = region_diameter;
          break;
        case NodeOp::Const:
          L = 0.0;
          G = std::abs(node.c);
          break;
        case NodeOp::Add: {
          const int j = pos(node.preds[0]), k = pos(node.preds[1]);
          L = ba.L[j] + ba.L[k];
          G = ba.G[j] + ba.G[k];
          if (ba.has_smoothness) S = ba.S[j] + ba.S[k];
          break;
        }
        case NodeOp::Mul: {
          const int j = pos(node.preds[0]), k = pos(node.preds[1]);
          L = ba.L[j] * ba.G[k] + ba.G[j] * ba.L[k];
          G = ba.G[j] * ba.G[k];
          if (ba.has_smoothness)
            S = ba.S[j] * ba.G[k] + ba.G[j] * ba.S[k] + 2.0 * ba.L[j] * ba.L[k];
          break;
        }
        case NodeOp::Relu: {
          const int j = pos(node.preds[0]);
          L = ba.L[j];
          G = ba.G[j];
          if (ba.has_smoothness) S = ba.G[j] * ba.S[j] + ba.L[j] / (2.0 * softrelu_a);
          break;
        }
        case NodeOp::Output: {
          const int j = pos(node.preds[0]);
          L = ba.L[j];
          G = ba.G[j];
          if (ba.has_smoothness) S = ba.S[j];
          break;
        }
      }
      ba.L[i] = L;
      ba.G[i] = G;
      if (ba.has_smoothness) ba.S[i] = S;
    }
    ba.L_out = ba.L[output_pos_];
    ba.G_out = ba.G[output_pos_];
    if (ba.has_smoothness) ba.S_out = ba.S[output_pos_];
    return ba;
  }

 private:
  explicit Circuit(const CircuitDef& def) : def_(def) {
    for (int i = 0; i < static_cast<int>(def_.nodes.size()); ++i) pos_[def_.nodes[i].id] = i;
    for (const auto& n : def_.nodes) {
      if (n.op == NodeOp::Input) ++num_inputs_;
      if (n.op == NodeOp::Bias) ++num_biases_;
      if (n.op == NodeOp::Output) output_pos_ = pos_.at(n.id);
    }
    // Kahn with smallest-node-id tie-breaking; validated acyclic.
    std::map<int, int> remaining;
    std::map<int, std::vector<int>> succs;
    for (const auto& n : def_.nodes) remaining[n.id] = static_cast<int>(n.preds.size());
    for (const auto& n : def_.nodes)
      for (int p : n.preds) succs[p].push_back(n.id);
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (const auto& [id, deg] : remaining)
      if (deg == 0) ready.push(id);
    while (!ready.empty()) {
      int id = ready.top();
      ready.pop();
      topo_ids_.push_back(id);
      topo_pos_.push_back(pos_.at(id));
      for (int s : succs[id])
        if (--remaining[s] == 0) ready.push(s);
    }
  }

  int pos(int id) const { return pos_.at(id); }

  static double relu_deriv(double z, double a) {
    if (a <= 0.0) return z > 0.0 ? 1.0 : 0.0;  // derivative 0 at the kink
    return std::clamp((z + a) / (2.0 * a), 0.0, 1.0);
  }

  void forward(const Vec& x, double a, Vec& vals) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("point dimension " + std::to_string(x.size()) +
                                  " does not match circuit dimension " + std::to_string(dim()));
    vals.assign(size(), 0.0);
    for (int i : topo_pos_) {
      const auto& node = def_.nodes[i];
      switch (node.op) {
        case NodeOp::Input: vals[i] = x[node.index]; break;
        case NodeOp::Bias: vals[i] = x[num_inputs_ + node.index]; break;
        case NodeOp::Const: vals[i] = node.c; break;
        case NodeOp::Add: vals[i] = vals[pos(node.preds[0])] + vals[pos(node.preds[1])]; break;
        case NodeOp::Mul: vals[i] = vals[pos(node.preds[0])] * vals[pos(node.preds[1])]; break;
        case NodeOp::Relu: {
          const double z = vals[pos(node.preds[0])];
          if (a <= 0.0) {
            vals[i] = std::max(z, 0.0);
          } else if (z >= a) {
            vals[i] = z;
          } else if (z < -a) {
            vals[i] = 0.0;
          } else {
            vals[i] = (z + a) * (z + a) / (4.0 * a);
          }
          break;
        }
        case NodeOp::Output: vals[i] = vals[pos(node.preds[0])]; break;
      }
    }
  }

  CircuitDef def_;
  std::map<int, int> pos_;
  std::vector<int> topo_ids_;   // node ids in topo order
  std::vector<int> topo_pos_;   // positions in def_.nodes, same order
  int num_inputs_ = 0, num_biases_ = 0, output_pos_ = 0;
};

// --- JSON file format -------------------------------------------------------
// { "nodes": [ {"id": int, "kind": str, "index": int?, "c": number?,
//               "preds": [int,...]} ] }

inline nlohmann::json to_json(const CircuitDef& def) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : def.nodes) {
    nlohmann::json j{{"id", n.id}, {"kind", to_string(n.op)}, {"preds", n.preds}};
    if (n.op == NodeOp::Input || n.op == NodeOp::Bias) j["index"] = n.index;
    if (n.op == NodeOp::Const) j["c"] = n.c;
    nodes.push_back(std::move(j));
  }
  return nlohmann::json{{"nodes", std::move(nodes)}};
}

inline CircuitDef circuit_from_json(const nlohmann::json& j) {
  CircuitDef def;
  if (!j.contains("nodes") || !j["nodes"].is_array())
    throw CircuitError("circuit JSON must contain a \"nodes\" array");
  for (const auto& jn : j["nodes"]) {
    CircuitDef::NodeDef n;
    n.id = jn.at("id").get<int>();
    n.op = node_op_from_string(jn.at("kind").get<std::string>());
    if (jn.contains("index")) n.index = jn["index"].get<int>();
    if (jn.contains("c")) n.c = jn["c"].get<double>();
    if (jn.contains("preds")) n.preds = jn["preds"].get<std::vector<int>>();
    def.nodes.push_back(std::move(n));
  }
  return def;
}

inline std::string serialize_circuit(const CircuitDef& def) { return to_json(def).dump(2); }

inline CircuitDef parse_circuit(const std::string& text) {
  return circuit_from_json(nlohmann::json::parse(text));
}

inline bool operator==(const CircuitDef::NodeDef& a, const CircuitDef::NodeDef& b) {
  return a.id == b.id && a.op == b.op && a.index == b.index && a.c == b.c && a.preds == b.preds;
}
inline bool operator==(const CircuitDef& a, const CircuitDef& b) { return a.nodes == b.nodes; }

}  // namespace goldstein
