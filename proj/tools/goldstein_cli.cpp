// Command-line front end: circuit validation and evaluation, smoothing,
// solvers, stationarity certification, lower-bound adversaries, and the
// benchmark harness. Exit codes: 0 success, 1 usage error, 2 run error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "goldstein/adversary.hpp"
#include "goldstein/bench.hpp"
#include "goldstein/builtins.hpp"
#include "goldstein/circuit.hpp"
#include "goldstein/oracle.hpp"
#include "goldstein/smoothing.hpp"
#include "goldstein/solver.hpp"
#include "goldstein/stationarity.hpp"

namespace {

using namespace goldstein;

Vec parse_csv_vec(const std::string& s, int dim_for_zeros) {
  if (s == "zeros") return Vec(dim_for_zeros, 0.0);
  Vec v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Loads "builtin:<name>" or a circuit JSON file. A smoothed circuit file may
// carry "a" on its relu nodes; the common value is returned as half_width.
CircuitDef load_circuit(const std::string& ref, std::optional<double>* half_width = nullptr,
                        Vec* suggested_x0 = nullptr) {
  if (ref.rfind("builtin:", 0) == 0) {
    BuiltinInstance b = builtin_instance(ref.substr(8));
    if (suggested_x0) *suggested_x0 = b.x0;
    return b.def;
  }
  const nlohmann::json j = nlohmann::json::parse(read_file(ref));
  CircuitDef def = circuit_from_json(j);
  if (half_width)
    for (const auto& jn : j.at("nodes"))
      if (jn.value("kind", "") == "relu" && jn.contains("a"))
        *half_width = jn["a"].get<double>();
  return def;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << text;
}

int cmd_validate(const std::string& circuit_ref) {
  CircuitDef def = load_circuit(circuit_ref);
  ValidationReport rep = validate(def);
  if (rep.ok()) {
    std::cout << "valid\n";
    return 0;
  }
  std::cout << rep.to_string();
  return 2;
}

int cmd_eval_or_grad(const std::string& circuit_ref, const std::string& x_csv, double half_width,
                     bool want_grad) {
  std::optional<double> file_a;
  Circuit c = Circuit::compile(load_circuit(circuit_ref, &file_a));
  const double a = half_width > 0 ? half_width : file_a.value_or(0.0);
  const Vec x = parse_csv_vec(x_csv, c.dim());
  std::cout.precision(17);
  if (want_grad) {
    const Vec g = c.grad_soft(x, a);
    for (std::size_t i = 0; i < g.size(); ++i) std::cout << (i ? "," : "") << g[i];
    std::cout << "\n";
  } else {
    std::cout << c.eval_soft(x, a) << "\n";
  }
  return 0;
}

int cmd_bounds(const std::string& circuit_ref, double diam, double half_width) {
  std::optional<double> file_a;
  Circuit c = Circuit::compile(load_circuit(circuit_ref, &file_a));
  const double a = half_width > 0 ? half_width : file_a.value_or(0.0);
  BoundAnalysis ba = c.analyze_bounds(diam, a);
  nlohmann::json out{{"L", ba.L_out}, {"G", ba.G_out}, {"size", c.size()}, {"diam", diam}};
  if (ba.has_smoothness) {
    out["S"] = ba.S_out;
    out["a"] = a;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_smooth(const std::string& circuit_ref, double delta, double eps, double gamma,
               double diam, double half_width, const std::string& out_path,
               const std::string& report_path) {
  Circuit c = Circuit::compile(load_circuit(circuit_ref));
  SmoothingParams params;
  params.a = half_width;
  params.delta = delta;
  params.epsilon = eps;
  params.gamma = gamma;
  SmoothedCircuit sc = smooth(c, params, diam);

  nlohmann::json jc = to_json(sc.base().definition());
  for (auto& jn : jc["nodes"])
    if (jn["kind"] == "relu") jn["a"] = sc.half_width();
  if (!out_path.empty()) write_text(out_path, jc.dump(2) + "\n");

  const BoundAnalysis& ba = sc.bounds();
  nlohmann::json report{{"L", ba.L_out},
                        {"G", ba.G_out},
                        {"S_log", ba.log_S_bound},
                        {"gamma_bound_log", ba.log_gamma_bound},
                        {"delta_bound_log", ba.log_delta_bound},
                        {"eps_bound_log", ba.log_eps_bound},
                        {"a", sc.half_width()}};
  const std::string report_text = report.dump(2) + "\n";
  if (!report_path.empty())
    write_text(report_path, report_text);
  else
    std::cout << report_text;
  return 0;
}

int cmd_solve(const std::string& circuit_ref, bool do_smooth, double gamma, double delta,
              double eps, const std::string& x0_csv, const std::string& algo, uint64_t seed,
              int max_outer, double half_width, double diam, const std::string& out_path) {
  Vec builtin_x0;
  Circuit circuit = Circuit::compile(load_circuit(circuit_ref, nullptr, &builtin_x0));
  const int dim = circuit.dim();
  Vec x0 = x0_csv.empty() ? (builtin_x0.empty() ? Vec(dim, 0.0) : builtin_x0)
                          : parse_csv_vec(x0_csv, dim);

  std::unique_ptr<Oracle> oracle;
  std::optional<double> L;
  if (do_smooth) {
    SmoothingParams params;
    params.a = half_width;
    params.delta = delta;
    params.epsilon = eps;
    params.gamma = gamma > 0 ? gamma : std::min(delta, eps);
    SmoothedCircuit sc = smooth(circuit, params, diam);
    L = sc.bounds().L_out;
    oracle = std::make_unique<SmoothedCircuitOracle>(std::move(sc));
  } else {
    L = circuit.analyze_bounds(diam).L_out;
    oracle = std::make_unique<CircuitOracle>(std::move(circuit));
  }

  SolverConfig cfg;
  cfg.delta = delta;
  cfg.epsilon = eps;
  cfg.max_outer = max_outer > 0 ? max_outer : 20000;
  cfg.L = L;

  SolverResult res;
  if (algo == "det")
    res = deterministic_goldstein_sg(*oracle, x0, cfg);
  else if (algo == "rand-ls")
    res = randomized_goldstein_sg(*oracle, x0, cfg, seed);
  else if (algo == "sgd")
    res = sgd_on_uniform_smoothing(*oracle, x0, delta, eps, cfg.max_outer, delta, seed);
  else
    throw std::invalid_argument("unknown algo: " + algo);

  std::ostringstream csv;
  csv.precision(17);
  csv << "algo,delta,eps,oracle_calls,outer_iters,inner_iters,final_value,cert_norm,status\n";
  csv << algo << "," << delta << "," << eps << "," << res.oracle_calls << "," << res.outer_iters
      << "," << res.inner_iters_total << ",";
  if (res.final_value) csv << *res.final_value;
  csv << "," << res.certificate.norm << "," << to_string(res.status) << "\n";
  if (!out_path.empty())
    write_text(out_path, csv.str());
  else
    std::cout << csv.str();
  return 0;
}

int cmd_certify(const std::string& circuit_ref, const std::string& x_csv, double delta,
                int samples, const std::string& policy, uint64_t seed) {
  std::optional<double> file_a;
  Circuit c = Circuit::compile(load_circuit(circuit_ref, &file_a));
  const Vec x = parse_csv_vec(x_csv, c.dim());
  std::unique_ptr<Oracle> oracle;
  if (file_a) {
    SmoothingParams params;
    params.a = *file_a;
    oracle = std::make_unique<SmoothedCircuitOracle>(
        SmoothedCircuit(c, params, c.analyze_bounds(2.0, *file_a)));
  } else {
    oracle = std::make_unique<CircuitOracle>(c);
  }
  GoldsteinCertificate cert =
      certify(*oracle, x, delta, samples, sample_policy_from_string(policy), seed);
  std::cout << to_json(cert).dump(2) << "\n";
  return 0;
}

int cmd_adversary(const std::string& mode, int dim, int budget, double delta, double eps,
                  double L, double Delta, const std::string& algo, uint64_t seed,
                  const std::string& out_path) {
  nlohmann::json out;
  if (mode == "first-order") {
    AttackAlgo a;
    if (algo == "det")
      a = AttackAlgo::Det;
    else if (algo == "rand-ls")
      a = AttackAlgo::RandLineSample;
    else if (algo == "sgd")
      a = AttackAlgo::Sgd;
    else
      throw std::invalid_argument("unknown algo: " + algo);
    AttackReport rep = attack_det(a, dim, budget, delta, eps, L, Delta, seed, 100000);
    out = to_json(rep);
  } else if (mode == "grad-only") {
    AttackReport1D rep = attack_grad_only(budget, delta, eps);
    out = to_json(rep);
  } else {
    throw std::invalid_argument("unknown adversary mode: " + mode);
  }
  const std::string text = out.dump(2) + "\n";
  if (!out_path.empty())
    write_text(out_path, text);
  else
    std::cout << text;
  return 0;
}

int cmd_bench(const std::string& spec_path, const std::string& out_path, int workers) {
  BenchSpec spec = bench_spec_from_json(nlohmann::json::parse(read_file(spec_path)));
  std::vector<BenchRow> rows = run_bench(spec, workers);
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  if (!out_path.empty())
    write_text(out_path, csv.str());
  else
    std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural arithmetic circuits, deterministic smoothing, and Goldstein "
               "stationarity solvers"};
  app.require_subcommand(1);

  std::string circuit_ref, x_csv, x0_csv, algo = "det", policy = "lds", mode, out_path,
              report_path, spec_path;
  double delta = 0.1, eps = 0.1, gamma = 0.0, diam = 2.0, half_width = 0.0, L = 7.0,
         Delta = 1.0;
  int samples = 16, seed = 0, max_outer = 0, dim = 10, budget = 8, workers = 0;
  bool do_smooth = false;

  auto* validate_cmd = app.add_subcommand("validate", "structural validation of a circuit");
  validate_cmd->add_option("--circuit", circuit_ref)->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a circuit at a point");
  eval_cmd->add_option("--circuit", circuit_ref)->required();
  eval_cmd->add_option("--x", x_csv)->required();
  eval_cmd->add_option("--half-width", half_width);

  auto* grad_cmd = app.add_subcommand("grad", "gradient of a circuit at a point");
  grad_cmd->add_option("--circuit", circuit_ref)->required();
  grad_cmd->add_option("--x", x_csv)->required();
  grad_cmd->add_option("--half-width", half_width);

  auto* bounds_cmd = app.add_subcommand("bounds", "recursive Lipschitz/value bounds");
  bounds_cmd->add_option("--circuit", circuit_ref)->required();
  bounds_cmd->add_option("--diam", diam);
  bounds_cmd->add_option("--half-width", half_width);

  auto* smooth_cmd = app.add_subcommand("smooth", "rewrite relu gates into softrelu gates");
  smooth_cmd->add_option("--circuit", circuit_ref)->required();
  smooth_cmd->add_option("--delta", delta);
  smooth_cmd->add_option("--eps", eps);
  smooth_cmd->add_option("--gamma", gamma);
  smooth_cmd->add_option("--diam", diam);
  smooth_cmd->add_option("--half-width", half_width);
  smooth_cmd->add_option("--out", out_path);
  smooth_cmd->add_option("--report", report_path);

  auto* solve_cmd = app.add_subcommand("solve", "run a solver on a circuit");
  solve_cmd->add_option("--circuit", circuit_ref)->required();
  solve_cmd->add_flag("--smooth", do_smooth);
  solve_cmd->add_option("--gamma", gamma);
  solve_cmd->add_option("--delta", delta)->required();
  solve_cmd->add_option("--eps", eps)->required();
  solve_cmd->add_option("--x0", x0_csv);
  solve_cmd->add_option("--algo", algo)->required();
  solve_cmd->add_option("--seed", seed);
  solve_cmd->add_option("--max-outer", max_outer);
  solve_cmd->add_option("--half-width", half_width);
  solve_cmd->add_option("--diam", diam);
  solve_cmd->add_option("--out", out_path);

  auto* certify_cmd = app.add_subcommand("certify", "Goldstein stationarity certificate");
  certify_cmd->add_option("--circuit", circuit_ref)->required();
  certify_cmd->add_option("--x", x_csv)->required();
  certify_cmd->add_option("--delta", delta)->required();
  certify_cmd->add_option("--samples", samples);
  certify_cmd->add_option("--policy", policy);
  certify_cmd->add_option("--seed", seed);

  auto* adversary_cmd = app.add_subcommand("adversary", "resisting-oracle lower-bound attack");
  adversary_cmd->add_option("--mode", mode)->required();
  adversary_cmd->add_option("--dim", dim);
  adversary_cmd->add_option("--budget", budget);
  adversary_cmd->add_option("--delta", delta)->required();
  adversary_cmd->add_option("--eps", eps)->required();
  adversary_cmd->add_option("--L", L);
  adversary_cmd->add_option("--Delta", Delta);
  adversary_cmd->add_option("--algo", algo);
  adversary_cmd->add_option("--seed", seed);
  adversary_cmd->add_option("--out", out_path);

  auto* bench_cmd = app.add_subcommand("bench", "batch benchmark runs from a JSON spec");
  bench_cmd->add_option("--spec", spec_path)->required();
  bench_cmd->add_option("--out", out_path);
  bench_cmd->add_option("--workers", workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  if (app.got_subcommand(smooth_cmd) && half_width <= 0.0 && gamma <= 0.0) {
    std::cerr << "smooth: pass --half-width, or --gamma/--delta/--eps to derive one\n";
    return 1;
  }

  try {
    if (app.got_subcommand(validate_cmd)) return cmd_validate(circuit_ref);
    if (app.got_subcommand(eval_cmd)) return cmd_eval_or_grad(circuit_ref, x_csv, half_width, false);
    if (app.got_subcommand(grad_cmd)) return cmd_eval_or_grad(circuit_ref, x_csv, half_width, true);
    if (app.got_subcommand(bounds_cmd)) return cmd_bounds(circuit_ref, diam, half_width);
    if (app.got_subcommand(smooth_cmd))
      return cmd_smooth(circuit_ref, delta, eps, gamma, diam, half_width, out_path, report_path);
    if (app.got_subcommand(solve_cmd))
      return cmd_solve(circuit_ref, do_smooth, gamma, delta, eps, x0_csv, algo,
                       static_cast<uint64_t>(seed), max_outer, half_width, diam, out_path);
    if (app.got_subcommand(certify_cmd))
      return cmd_certify(circuit_ref, x_csv, delta, samples, policy, static_cast<uint64_t>(seed));
    if (app.got_subcommand(adversary_cmd))
      return cmd_adversary(mode, dim, budget, delta, eps, L, Delta, algo,
                           static_cast<uint64_t>(seed), out_path);
    if (app.got_subcommand(bench_cmd)) return cmd_bench(spec_path, out_path, workers);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
