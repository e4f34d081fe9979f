// qmra command-line driver: synthetic graph generation, solving,
// benchmarking, refinement analysis and QUBO statistics export.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmra/graph.hpp"
#include "qmra/graph_io.hpp"
#include "qmra/iterative.hpp"
#include "qmra/qubo.hpp"
#include "qmra/refine.hpp"
#include "qmra/remote.hpp"
#include "qmra/solvers.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw qmra::IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw qmra::IoError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// shared flag bundles

struct SolverFlags {
  std::string backend = "sa";
  int m = 3;
  double delta0 = M_PI / 30.0;
  double kappa = 0.0;
  double tau = 2.0;
  double alpha = 0.5;
  double epsilon = 1e-8;
  int maxiter = 100;
  std::string init = "identity";
  std::string refine = "off";
  long refine_topk = 30;
  double refine_beta = 2.0;
  std::uint64_t seed = 0;
  int reads = 100;
  int sweeps = 200;
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::string annealer_url;
  std::string annealer_token;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend", backend, "Sampling backend")
        ->check(CLI::IsMember({"exhaustive", "sa", "remote"}));
    cmd->add_option("--m", m, "Bits per tangent dimension");
    cmd->add_option("--delta0", delta0, "Initial search radius (radians)");
    cmd->add_option("--kappa", kappa, "Radius-contraction threshold (0 = delta0/10)");
    cmd->add_option("--tau", tau, "Radius contraction rate");
    cmd->add_option("--alpha", alpha, "Orthogonality penalty weight");
    cmd->add_option("--epsilon", epsilon, "Stopping residual");
    cmd->add_option("--maxiter", maxiter, "Maximum iterations");
    cmd->add_option("--init", init, "Initialization scheme")
        ->check(CLI::IsMember({"identity", "mst"}));
    cmd->add_option("--refine", refine, "Posterior refinement mode")
        ->check(CLI::IsMember({"off", "topk"}));
    cmd->add_option("--refine-topk", refine_topk, "Voters for refinement");
    cmd->add_option("--refine-beta", refine_beta, "Refinement inverse temperature");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--reads", reads, "Annealer reads per iteration");
    cmd->add_option("--sweeps", sweeps, "Annealer sweeps per read");
    cmd->add_option("--beta-start", beta_start, "Annealing schedule start");
    cmd->add_option("--beta-end", beta_end, "Annealing schedule end");
    cmd->add_option("--annealer-url", annealer_url,
                    "Remote solver URL (default: env QMRA_ANNEALER_URL)");
    cmd->add_option("--annealer-token", annealer_token,
                    "Remote solver token (default: env QMRA_ANNEALER_TOKEN)");
  }

  qmra::SolveConfig solve_config() const {
    qmra::SolveConfig cfg;
    cfg.maxiter = maxiter;
    cfg.delta0 = delta0;
    cfg.kappa = kappa;
    cfg.tau = tau;
    cfg.m = m;
    cfg.epsilon = epsilon;
    cfg.alpha = alpha;
    cfg.init = init == "mst" ? qmra::InitScheme::kMst
                             : qmra::InitScheme::kIdentity;
    cfg.refine = refine == "topk";
    cfg.refine_topk = refine_topk;
    cfg.refine_beta = refine_beta;
    cfg.seed = seed;
    return cfg;
  }

  qmra::Sampler sampler() const {
    if (backend == "exhaustive") return qmra::make_exhaustive_sampler();
    if (backend == "remote") {
      qmra::RemoteConfig rc = qmra::remote_config_from_env();
      if (!annealer_url.empty()) rc.url = annealer_url;
      if (!annealer_token.empty()) rc.token = annealer_token;
      rc.reads = reads;
      return qmra::make_remote_sampler(rc);
    }
    qmra::SaConfig sa;
    sa.reads = reads;
    sa.sweeps = sweeps;
    sa.beta_start = beta_start;
    sa.beta_end = beta_end;
    sa.seed = seed;
    return qmra::make_sa_sampler(sa);
  }

  nlohmann::json to_json() const {
    return {{"backend", backend},       {"m", m},
            {"delta0", delta0},         {"kappa", kappa},
            {"tau", tau},               {"alpha", alpha},
            {"epsilon", epsilon},       {"maxiter", maxiter},
            {"init", init},             {"refine", refine},
            {"refine_topk", refine_topk}, {"refine_beta", refine_beta},
            {"seed", seed},             {"reads", reads},
            {"sweeps", sweeps},         {"beta_start", beta_start},
            {"beta_end", beta_end}};
  }
};

nlohmann::json result_to_json(const qmra::EstimationResult& result) {
  nlohmann::json doc;
  doc["residual"] = result.residual;
  doc["residual_angle"] = result.residual_angle;
  if (std::isfinite(result.angle_error)) {
    doc["angle_error"] = result.angle_error;
  } else {
    doc["angle_error"] = nullptr;
  }
  doc["iterations"] = result.iterations;
  doc["projection_failures"] = result.projection_failures;
  doc["rotations"] = nlohmann::json::array();
  for (const auto& r : result.rotations) {
    doc["rotations"].push_back(qmra::detail::matrix_to_json(r));
  }
  doc["tangents"] = nlohmann::json::array();
  for (const auto& t : result.tangents) {
    doc["tangents"].push_back({t.x(), t.y(), t.z()});
  }
  return doc;
}

std::string trace_to_csv(const qmra::EstimationResult& result) {
  std::ostringstream out;
  out << "iter,residual,best_energy,energy_gap,delta\n";
  for (const auto& rec : result.trace) {
    out << rec.iter << ',' << fmt_double(rec.residual) << ','
        << fmt_double(rec.best_energy) << ',' << fmt_double(rec.energy_gap)
        << ',' << fmt_double(rec.delta) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  int n = 10;
  double sigma = 0.0;
  double sparsity = 1.0;
  std::string topology = "complete";
  std::uint64_t seed = 0;
  std::string out = "graph.json";
};

int cmd_generate(const GenerateArgs& args) {
  const auto gt = qmra::generate_ground_truth(args.n, args.seed);
  qmra::CameraGraph g = qmra::build_relative_measurements(gt);
  if (args.sigma > 0.0) {
    g = qmra::corrupt_with_noise(g, {args.sigma, args.seed});
  }
  if (args.sparsity < 1.0) {
    g = qmra::sparsify(g, args.sparsity, args.seed);
  }
  g.validate();
  qmra::save_graph(g, args.out);
  std::cout << "wrote " << args.out << " (n=" << g.n
            << ", edges=" << g.edges.size() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string graph;
  std::string method = "iterative";
  std::string out = "result.json";
  std::string trace_out;
  std::string manifest_out;
  SolverFlags solver;
};

qmra::EstimationResult run_method(const qmra::CameraGraph& g,
                                  const std::string& method,
                                  const SolverFlags& flags) {
  if (method == "lm") return qmra::solve_lm(g, flags.solve_config());
  if (method == "direct") {
    return qmra::solve_direct(g, flags.sampler(), flags.seed);
  }
  return qmra::solve_iterative(g, flags.sampler(), flags.solve_config());
}

int cmd_solve(const SolveArgs& args) {
  const qmra::CameraGraph g = qmra::load_graph(args.graph);
  const qmra::EstimationResult result =
      run_method(g, args.method, args.solver);

  write_text_file(args.out, result_to_json(result).dump(2) + "\n");
  const std::string trace_path =
      args.trace_out.empty() ? args.out + ".trace.csv" : args.trace_out;
  write_text_file(trace_path, trace_to_csv(result));

  nlohmann::json manifest;
  manifest["command"] = "solve";
  manifest["method"] = args.method;
  manifest["config"] = args.solver.to_json();
  manifest["seeds"] = {args.solver.seed};
  manifest["timestamp"] = iso_timestamp();
  manifest["inputs"] = {args.graph};
  manifest["outputs"] = {args.out, trace_path};
  manifest["version"] = kVersion;
  const std::string manifest_path = args.manifest_out.empty()
                                        ? args.out + ".manifest.json"
                                        : args.manifest_out;
  write_text_file(manifest_path, manifest.dump(2) + "\n");

  std::cout << "method=" << args.method
            << " residual=" << fmt_double(result.residual)
            << " residual_angle=" << fmt_double(result.residual_angle)
            << " iters=" << result.iterations << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
  int n = 20;
  std::vector<double> sigmas;
  int seeds = 10;
  std::vector<std::string> methods = {"iterative", "lm"};
  double keep_ratio = 1.0;
  int jobs = 0;
  std::string out = "benchmark.csv";
  SolverFlags solver;
};

struct BenchmarkCell {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  std::string row;
};

int cmd_benchmark(const BenchmarkArgs& args) {
  if (args.sigmas.empty()) {
    throw qmra::UsageError("benchmark: --sigmas must not be empty");
  }
  if (args.seeds < 1) throw qmra::UsageError("benchmark: --seeds >= 1");

  std::vector<BenchmarkCell> cells;
  for (double sigma : args.sigmas) {
    for (int seed = 0; seed < args.seeds; ++seed) {
      for (const auto& method : args.methods) {
        cells.push_back({sigma, static_cast<std::uint64_t>(seed), method, ""});
      }
    }
  }

  auto run_cell = [&](BenchmarkCell& cell) {
    std::ostringstream row;
    row << fmt_double(cell.sigma) << ',' << cell.seed << ',' << cell.method
        << ',';
    try {
      const auto gt = qmra::generate_ground_truth(args.n, cell.seed);
      qmra::CameraGraph g = qmra::build_relative_measurements(gt);
      if (cell.sigma > 0.0) {
        g = qmra::corrupt_with_noise(g, {cell.sigma, cell.seed});
      }
      if (args.keep_ratio < 1.0) {
        g = qmra::sparsify(g, args.keep_ratio, cell.seed);
      }
      SolverFlags flags = args.solver;
      flags.seed = qmra::detail::mix_seed(args.solver.seed, cell.seed);
      const auto t0 = std::chrono::steady_clock::now();
      const qmra::EstimationResult result = run_method(g, cell.method, flags);
      const auto t1 = std::chrono::steady_clock::now();
      const long wall_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
              .count();
      row << fmt_double(result.residual) << ','
          << fmt_double(result.residual_angle) << ','
          << fmt_double(result.angle_error) << ',' << result.iterations << ','
          << wall_ms << ",ok";
    } catch (const qmra::Error& err) {
      std::string what = err.what();
      for (char& c : what) {
        if (c == ',' || c == '\n') c = ';';
      }
      row << "nan,nan,nan,0,0,error: " << what;
    }
    cell.row = row.str();
  };

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int jobs = args.jobs > 0 ? args.jobs : std::max(1, hw);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < cells.size();
         k = next.fetch_add(1)) {
      run_cell(cells[k]);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "sigma,seed,method,residual,residual_angle,angle_error,iters,"
         "wall_ms,status\n";
  for (const auto& cell : cells) csv << cell.row << '\n';
  write_text_file(args.out, csv.str());
  std::cout << "wrote " << args.out << " (" << cells.size() << " cells)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// refine benchmark

struct RefineArgs {
  std::string graph;
  int synthetic_bits = 12;
  double beta = 2.0;
  long topk = 30;
  std::vector<long> k_grid;
  int trials = 200;
  std::string out = "refine.csv";
  SolverFlags solver;
};

int cmd_refine(const RefineArgs& args) {
  qmra::BinaryQubo qubo;
  if (!args.graph.empty()) {
    const qmra::CameraGraph g = qmra::load_graph(args.graph);
    const auto cost = qmra::build_cost_matrix(g);
    const std::vector<Eigen::Vector3d> identity(g.n, Eigen::Vector3d::Zero());
    qubo = qmra::binarize(
        qmra::linearize(cost, identity, args.solver.alpha, args.solver.delta0),
        args.solver.m);
  } else {
    // synthetic dense Gaussian instance, seed-pinned
    std::mt19937_64 rng(args.solver.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int dim = args.synthetic_bits;
    qubo.q_tilde = Eigen::MatrixXd::Zero(dim, dim);
    qubo.c_tilde = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) {
      qubo.c_tilde(i) = gauss(rng);
      for (int j = i; j < dim; ++j) {
        const double v = gauss(rng);
        qubo.q_tilde(i, j) = v / 2.0;
        qubo.q_tilde(j, i) = v / 2.0;
      }
    }
    qubo.n = 0;
    qubo.m = 0;
  }

  std::vector<long> grid = args.k_grid;
  if (grid.empty()) grid = {args.topk};
  const auto rows = qmra::refinement_benchmark(
      qubo, args.solver.sampler(), args.beta, grid, args.trials,
      args.solver.seed);

  std::ostringstream csv;
  csv << "K,improve_freq,mean_delta\n";
  for (const auto& row : rows) {
    csv << row.k << ',' << fmt_double(row.improve_freq) << ','
        << fmt_double(row.mean_delta) << '\n';
  }
  write_text_file(args.out, csv.str());
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string graph;
  std::string out = "stats.csv";
  SolverFlags solver;
};

int cmd_stats(const StatsArgs& args) {
  const qmra::CameraGraph g = qmra::load_graph(args.graph);
  const auto cost = qmra::build_cost_matrix(g);
  const std::vector<Eigen::Vector3d> identity(g.n, Eigen::Vector3d::Zero());
  const qmra::BinaryQubo qubo = qmra::binarize(
      qmra::linearize(cost, identity, args.solver.alpha, args.solver.delta0),
      args.solver.m);
  const qmra::SparsityStats stats = qmra::coupling_sparsity_stats(qubo);

  std::ostringstream csv;
  csv << "metric,value\n";
  csv << "logical_qubits," << qmra::logical_qubit_count(g.n, args.solver.m)
      << '\n';
  csv << "dim," << qubo.dim() << '\n';
  csv << "nonzero_fraction," << fmt_double(stats.nonzero_fraction) << '\n';
  csv << "bandwidth," << stats.bandwidth << '\n';
  for (std::size_t d = 0; d < stats.degree_histogram.size(); ++d) {
    if (stats.degree_histogram[d] > 0) {
      csv << "degree_" << d << ',' << stats.degree_histogram[d] << '\n';
    }
  }
  write_text_file(args.out, csv.str());
  std::cout << "wrote " << args.out << " (qubits="
            << qmra::logical_qubit_count(g.n, args.solver.m) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QUBO-based multiple rotation averaging"};
  app.set_version_flag("--version", std::string("qmra ") + kVersion);
  app.set_config("--config", "", "Config file (TOML) mirroring the flags");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cgen = app.add_subcommand("generate", "Write a synthetic camera graph");
  cgen->add_option("--n", gen.n, "Node count")->check(CLI::PositiveNumber);
  cgen->add_option("--sigma", gen.sigma, "Noise level (radians)");
  cgen->add_option("--sparsity", gen.sparsity, "Undirected edge keep ratio");
  cgen->add_option("--topology", gen.topology, "Graph topology")
      ->check(CLI::IsMember({"complete"}));
  cgen->add_option("--seed", gen.seed, "Random seed");
  cgen->add_option("--out", gen.out, "Output graph path");

  SolveArgs solve;
  auto* csolve = app.add_subcommand("solve", "Synchronize a camera graph");
  csolve->add_option("--graph", solve.graph, "Input graph path")->required();
  csolve->add_option("--method", solve.method, "Solver method")
      ->check(CLI::IsMember({"iterative", "lm", "direct"}));
  csolve->add_option("--out", solve.out, "Result JSON path");
  csolve->add_option("--trace-out", solve.trace_out, "Trace CSV path");
  csolve->add_option("--manifest-out", solve.manifest_out, "Manifest path");
  solve.solver.add_to(csolve);

  BenchmarkArgs bench;
  auto* cbench = app.add_subcommand("benchmark", "Sweep noise x seeds x methods");
  cbench->add_option("--n", bench.n, "Node count");
  cbench->add_option("--sigmas", bench.sigmas, "Noise levels (radians)")
      ->required();
  cbench->add_option("--seeds", bench.seeds, "Number of seeds (0..S-1)");
  cbench->add_option("--methods", bench.methods, "Methods to run");
  cbench->add_option("--keep-ratio", bench.keep_ratio, "Sparsify keep ratio");
  cbench->add_option("--jobs", bench.jobs, "Parallel cells (0 = hardware)");
  cbench->add_option("--out", bench.out, "Output CSV path");
  bench.solver.add_to(cbench);

  RefineArgs refine;
  auto* crefine = app.add_subcommand("refine", "Posterior refinement statistics");
  crefine->add_option("--graph", refine.graph,
                      "Build the QUBO from this graph (default: synthetic)");
  crefine->add_option("--synthetic-bits", refine.synthetic_bits,
                      "Synthetic instance size when no graph is given");
  crefine->add_option("--beta", refine.beta, "Refinement inverse temperature");
  crefine->add_option("--topk", refine.topk, "Voters when no grid is given");
  crefine->add_option("--k-grid", refine.k_grid, "K values to sweep");
  crefine->add_option("--trials", refine.trials, "Trials per K");
  crefine->add_option("--out", refine.out, "Output CSV path");
  refine.solver.add_to(crefine);

  StatsArgs stats;
  auto* cstats = app.add_subcommand("stats", "First-iteration QUBO statistics");
  cstats->add_option("--graph", stats.graph, "Input graph path")->required();
  cstats->add_option("--out", stats.out, "Output CSV path");
  stats.solver.add_to(cstats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cgen->parsed()) return cmd_generate(gen);
    if (csolve->parsed()) return cmd_solve(solve);
    if (cbench->parsed()) return cmd_benchmark(bench);
    if (crefine->parsed()) return cmd_refine(refine);
    if (cstats->parsed()) return cmd_stats(stats);
  } catch (const qmra::UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const qmra::IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const qmra::BackendError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 4;
  } catch (const qmra::NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 5;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
