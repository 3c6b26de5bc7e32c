#pragma once

// Benchmark harness: a JSON spec fans out over (instance, algorithm, seed)
// runs and produces a stable, sorted CSV of oracle-call counts and
// certificate norms. Per-run failures land in the status column and never
// abort the batch.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <memory>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "goldstein/builtins.hpp"
#include "goldstein/oracle.hpp"
#include "goldstein/smoothing.hpp"
#include "goldstein/solver.hpp"

namespace goldstein {

struct BenchRun {
  std::string circuit;  // "builtin:<name>" or a circuit JSON file path
  bool smooth = false;
  double gamma = 0.0;
  std::optional<double> half_width;
  std::string algo;  // det | rand-ls | sgd
  double delta = 0.0;
  double epsilon = 0.0;
  std::vector<uint64_t> seeds;  // empty means the single seed 0
  int max_outer = 0;
  double diam = 2.0;
  std::optional<Vec> x0;
  int sgd_steps = 2000;
  double sgd_step_size = 0.0;  // <= 0: defaults to delta
};

struct BenchSpec {
  std::vector<BenchRun> runs;
};

inline BenchSpec bench_spec_from_json(const nlohmann::json& j) {
  BenchSpec spec;
  if (!j.contains("runs") || !j["runs"].is_array() || j["runs"].empty())
    throw std::invalid_argument("bench spec: nonempty \"runs\" array required");
  for (const auto& jr : j["runs"]) {
    BenchRun r;
    r.circuit = jr.at("circuit").get<std::string>();
    if (r.circuit.rfind("builtin:", 0) != 0 && !std::filesystem::exists(r.circuit))
      throw std::invalid_argument("bench spec: circuit file not found: " + r.circuit);
    r.smooth = jr.value("smooth", false);
    r.gamma = jr.value("gamma", 0.0);
    if (jr.contains("half_width")) r.half_width = jr["half_width"].get<double>();
    r.algo = jr.at("algo").get<std::string>();
    if (r.algo != "det" && r.algo != "rand-ls" && r.algo != "sgd")
      throw std::invalid_argument("bench spec: unknown algo " + r.algo);
    r.delta = jr.at("delta").get<double>();
    r.epsilon = jr.at("eps").get<double>();
    if (r.delta <= 0 || r.epsilon <= 0)
      throw std::invalid_argument("bench spec: delta and eps must be positive");
    if (r.smooth && r.gamma <= 0 && !r.half_width)
      throw std::invalid_argument("bench spec: smoothing needs gamma > 0 or half_width");
    if (jr.contains("seeds")) r.seeds = jr["seeds"].get<std::vector<uint64_t>>();
    r.max_outer = jr.value("max_outer", 0);
    r.diam = jr.value("diam", 2.0);
    if (jr.contains("x0")) r.x0 = jr["x0"].get<Vec>();
    r.sgd_steps = jr.value("sgd_steps", 2000);
    r.sgd_step_size = jr.value("sgd_step_size", 0.0);
    spec.runs.push_back(std::move(r));
  }
  return spec;
}

struct BenchRow {
  std::string instance;
  std::string algo;
  uint64_t seed = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  int oracle_calls = 0;
  double cert_norm = 0.0;
  std::string status;
  double wall_time_ms = 0.0;
};

inline CircuitDef resolve_circuit(const std::string& ref, Vec* default_x0 = nullptr) {
  if (ref.rfind("builtin:", 0) == 0) {
    BuiltinInstance b = builtin_instance(ref.substr(8));
    if (default_x0) *default_x0 = b.x0;
    return b.def;
  }
  std::ifstream in(ref);
  if (!in) throw std::invalid_argument("cannot open circuit file: " + ref);
  std::stringstream ss;
  ss << in.rdbuf();
  CircuitDef def = parse_circuit(ss.str());
  if (default_x0) {
    Circuit c = Circuit::compile(def);
    default_x0->assign(c.dim(), 0.0);
    if (!default_x0->empty()) (*default_x0)[0] = 1.0;
  }
  return def;
}

inline BenchRow run_one(const BenchRun& run, uint64_t seed) {
  BenchRow row;
  row.instance = run.circuit;
  row.algo = run.algo;
  row.seed = seed;
  row.delta = run.delta;
  row.epsilon = run.epsilon;
  const auto start = std::chrono::steady_clock::now();
  try {
    Vec x0;
    Circuit circuit = Circuit::compile(resolve_circuit(run.circuit, &x0));
    if (run.x0) x0 = *run.x0;

    std::unique_ptr<Oracle> oracle;
    std::optional<double> L;
    if (run.smooth) {
      SmoothingParams params;
      params.gamma = run.gamma > 0 ? run.gamma : std::min(run.delta, run.epsilon);
      params.delta = run.delta;
      params.epsilon = run.epsilon;
      if (run.half_width) params.a = *run.half_width;
      SmoothedCircuit sc = goldstein::smooth(circuit, params, run.diam);
      L = sc.bounds().L_out;
      oracle = std::make_unique<SmoothedCircuitOracle>(std::move(sc));
    } else {
      L = circuit.analyze_bounds(run.diam).L_out;
      oracle = std::make_unique<CircuitOracle>(std::move(circuit));
    }

    SolverConfig cfg;
    cfg.delta = run.delta;
    cfg.epsilon = run.epsilon;
    cfg.max_outer = run.max_outer > 0 ? run.max_outer : 20000;
    cfg.L = L;

    SolverResult res;
    if (run.algo == "det")
      res = deterministic_goldstein_sg(*oracle, x0, cfg);
    else if (run.algo == "rand-ls")
      res = randomized_goldstein_sg(*oracle, x0, cfg, seed);
    else
      res = sgd_on_uniform_smoothing(*oracle, x0, run.delta, run.epsilon, run.sgd_steps,
                                     run.sgd_step_size > 0 ? run.sgd_step_size : run.delta, seed);
    row.oracle_calls = res.oracle_calls;
    row.cert_norm = res.certificate.norm;
    row.status = to_string(res.status);
  } catch (const std::exception& e) {
    row.status = std::string("Error: ") + e.what();
  }
  row.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

inline int bench_worker_count() {
  if (const char* env = std::getenv("GOLDSTEIN_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

inline std::vector<BenchRow> run_bench(const BenchSpec& spec, int workers = 0) {
  std::vector<std::pair<const BenchRun*, uint64_t>> tasks;
  for (const auto& run : spec.runs) {
    std::vector<uint64_t> seeds = run.seeds.empty() ? std::vector<uint64_t>{0} : run.seeds;
    // deterministic algos still record a seed (always 0) for auditability
    if (run.algo == "det") seeds = {0};
    for (uint64_t s : seeds) tasks.emplace_back(&run, s);
  }
  std::vector<BenchRow> rows(tasks.size());
  if (workers <= 0) workers = bench_worker_count();
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) rows[i] = run_one(*tasks[i].first, tasks[i].second);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          rows[i] = run_one(*tasks[i].first, tasks[i].second);
      });
    for (auto& t : pool) t.join();
  }
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.instance, a.algo, a.seed, a.delta, a.epsilon) <
           std::tie(b.instance, b.algo, b.seed, b.delta, b.epsilon);
  });
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "instance,algo,seed,delta,eps,oracle_calls,cert_norm,status,wall_time_ms\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.instance << "," << r.algo << "," << r.seed << "," << r.delta << "," << r.epsilon
       << "," << r.oracle_calls << "," << r.cert_norm << "," << r.status << ","
       << r.wall_time_ms << "\n";
}

}  // namespace goldstein
