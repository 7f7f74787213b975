#include "resnet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "resnet/error.hpp"
#include "resnet/init_graph.hpp"
#include "resnet/io.hpp"
#include "resnet/measurements.hpp"
#include "resnet/mesh.hpp"
#include "resnet/metrics.hpp"
#include "resnet/multilevel.hpp"
#include "resnet/sgl.hpp"
#include "resnet/verify.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "cli-io";
using json = nlohmann::json;

// JSON config: top-level keys set global options, an object named after a
// command sets that command's options. Command-line flags win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value " + v.dump());
  }

  static void collect(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        collect(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct SglFlags {
  int k = 5;
  int r = 5;
  double beta = 1e-3;
  double tol = 1e-12;
  int max_iterations = 500;
};

struct Paths {
  std::string graph, measurements, truth, learned, problem, out, report, trace, eigen;
};

void add_sgl_flags(CLI::App* cmd, SglFlags& f) {
  cmd->add_option("--k", f.k, "neighbors in the initial kNN graph")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--r", f.r, "eigenpairs in the spectral embedding")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--beta", f.beta, "fraction of off-tree candidates added per iteration")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--tol", f.tol, "stop when the largest sensitivity falls below this")
      ->capture_default_str();
  cmd->add_option("--max-iterations", f.max_iterations)->capture_default_str()
      ->check(CLI::PositiveNumber);
}

SglConfig to_sgl_config(const SglFlags& f) {
  SglConfig cfg;
  cfg.r = f.r;
  cfg.beta = f.beta;
  cfg.tol = f.tol;
  cfg.max_iterations = f.max_iterations;
  return cfg;
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, kModule, "write_report", "cannot open '" + path + "'");
  out << doc.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& path, const char* op) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, kModule, op, "cannot open '" + path + "'");
  out << std::setprecision(17);
  return out;
}

json trace_json(const std::vector<double>& trace) {
  json arr = json::array();
  for (double v : trace) arr.push_back(v);
  return arr;
}

void write_trace(const std::string& path, const std::vector<double>& trace) {
  auto out = open_csv(path, "write_trace");
  out << "iteration,s_max\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << ',' << trace[i] << '\n';
}

CandidatePool initial_pool(const MeasurementSet& ms, int k) {
  return extract_mst(build_knn(ms.X, {k}).graph);
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int thread_limit_from_env() {
  const char* text = std::getenv("RESNET_THREADS");
  if (text == nullptr || *text == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(text, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) {
    throw Error(ErrorKind::InvalidArgument, kModule, "threads",
                std::string("RESNET_THREADS must be a positive integer, got '") + text + "'");
  }
  return static_cast<int>(n);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Resistor network learning from voltage measurements"};
  app.name("resnet");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  Paths p;

  auto* gen_mesh_cmd = app.add_subcommand("gen-mesh", "write a unit-weight structured mesh");
  std::string kind = "grid2d", dims_text;
  gen_mesh_cmd->add_option("--kind", kind, "grid2d, grid3d, cycle or tree")->capture_default_str();
  gen_mesh_cmd->add_option("--dims", dims_text, "extents such as 64x64")->required();
  gen_mesh_cmd->add_option("--out", p.out, "Matrix Market output")->required();

  auto* gen_meas_cmd = app.add_subcommand("gen-measurements", "simulate voltage/current pairs");
  int m = 50;
  double noise = 0.0;
  std::optional<double> jl_epsilon;
  gen_meas_cmd->add_option("--graph", p.graph, "ground-truth graph")->required();
  auto* m_opt = gen_meas_cmd->add_option("--m", m, "number of measurements")
                    ->capture_default_str()->check(CLI::PositiveNumber);
  gen_meas_cmd->add_option("--noise", noise, "relative voltage noise level")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  gen_meas_cmd->add_option("--jl-epsilon", jl_epsilon,
                           "use the random-projection protocol with this distortion")
      ->check(CLI::Range(0.0, 1.0));
  gen_meas_cmd->add_option("--out", p.out, "measurement CSV")->required();

  auto* sgl_cmd = app.add_subcommand("learn-sgl", "learn a graph by spectral densification");
  SglFlags sgl_flags;
  add_sgl_flags(sgl_cmd, sgl_flags);
  sgl_cmd->add_option("--measurements", p.measurements)->required();
  sgl_cmd->add_option("--out", p.out, "learned graph")->required();
  sgl_cmd->add_option("--report", p.report, "JSON report");
  sgl_cmd->add_option("--trace", p.trace, "CSV of the largest sensitivity per iteration");

  auto* sf_cmd = app.add_subcommand("learn-sfsgl", "multilevel solver-free learning");
  SglFlags sf_flags;
  SfSglConfig sf_cfg;
  add_sgl_flags(sf_cmd, sf_flags);
  sf_cmd->add_option("--coarsest", sf_cfg.coarsest_size, "node count of the coarsest level")
      ->capture_default_str();
  sf_cmd->add_option("--ratio", sf_cfg.coarsening_ratio_target, "node reduction per level")
      ->capture_default_str();
  sf_cmd->add_option("--quota", sf_cfg.distortion_quota,
                     "edges added per refinement pass as a fraction of the nodes")
      ->capture_default_str();
  sf_cmd->add_option("--refine-passes", sf_cfg.refine_passes)->capture_default_str();
  sf_cmd->add_option("--cluster-cap", sf_cfg.max_cluster_size)->capture_default_str();
  sf_cmd->add_option("--smoother-k", sf_cfg.smoother.K)->capture_default_str();
  sf_cmd->add_option("--sweeps", sf_cfg.smoother.sweeps)->capture_default_str();
  sf_cmd->add_option("--measurements", p.measurements)->required();
  sf_cmd->add_option("--out", p.out, "learned graph")->required();
  sf_cmd->add_option("--report", p.report, "JSON report");
  sf_cmd->add_option("--trace", p.trace, "CSV of the coarsest-level sensitivity trace");

  auto* metrics_cmd = app.add_subcommand("metrics", "compare a learned graph with the truth");
  MetricsConfig metrics_cfg;
  metrics_cmd->add_option("--eigs", metrics_cfg.eig_count)->capture_default_str()
      ->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--pairs", metrics_cfg.pair_count)->capture_default_str()
      ->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--truth", p.truth)->required();
  metrics_cmd->add_option("--learned", p.learned)->required();
  metrics_cmd->add_option("--measurements", p.measurements, "voltages for objective values");
  metrics_cmd->add_option("--eigen-csv", p.eigen, "CSV of paired eigenvalues");
  metrics_cmd->add_option("--report", p.report, "JSON report");

  auto* layout_cmd = app.add_subcommand("layout", "2D spectral drawing coordinates");
  layout_cmd->add_option("--graph", p.graph)->required();
  layout_cmd->add_option("--out", p.out, "CSV of node coordinates")->required();

  auto* verify_cmd = app.add_subcommand("verify", "worst-case voltages under current budgets");
  std::string solver_name = "direct";
  verify_cmd->add_option("--problem", p.problem, "problem JSON")->required();
  verify_cmd->add_option("--graph", p.graph, "grid replacing the problem's graph");
  verify_cmd->add_option("--solver", solver_name)->capture_default_str()
      ->check(CLI::IsMember({"direct", "cg"}));
  verify_cmd->add_option("--out", p.out, "CSV of worst-case voltage per query");
  verify_cmd->add_option("--report", p.report, "JSON report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ConfigError& e) {
    std::string msg = e.what();
    const std::string ini = "INI was not able to parse ";
    if (msg.rfind(ini, 0) == 0) msg = "unknown key '" + msg.substr(ini.size()) + "'";
    err << kModule << "/read_config: " << msg << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    err << kModule << "/parse-args: " << e.what() << '\n';
    return 2;
  }

  try {
    if (const int threads = thread_limit_from_env(); threads > 0) Eigen::setNbThreads(threads);

    if (*gen_mesh_cmd) {
      const MeshKind mk = parse_mesh_kind(kind);
      const WeightedGraph g = gen_mesh(mk, parse_dims(dims_text));
      write_graph_file(p.out, g);
      out << "gen-mesh: " << to_string(mk) << ' ' << dims_text << ", " << g.node_count()
          << " nodes, " << g.edge_count() << " edges -> " << p.out << '\n';
    } else if (*gen_meas_cmd) {
      const WeightedGraph g = read_graph_file(p.graph);
      MeasurementSet ms;
      if (jl_epsilon) {
        JlConfig jl;
        jl.epsilon = *jl_epsilon;
        if (m_opt->count() > 0) jl.m_override = m;
        ms = generate_jl(g, jl, seed);
      } else {
        ms = generate_gaussian(g, m, seed);
      }
      if (noise > 0.0) ms = add_noise(ms, noise, seed + 0x9e3779b97f4a7c15ULL);
      write_measurements_file(p.out, ms);
      out << "gen-measurements: " << to_string(ms.source) << ", " << ms.node_count()
          << " nodes, M = " << ms.measurement_count() << ", noise " << noise << " -> "
          << p.out << '\n';
    } else if (*sgl_cmd) {
      const MeasurementSet ms = read_measurements_file(p.measurements);
      const auto t0 = std::chrono::steady_clock::now();
      const SglResult res = sgl_learn(ms, initial_pool(ms, sgl_flags.k), to_sgl_config(sgl_flags));
      const double secs = seconds_since(t0);
      write_graph_file(p.out, res.graph);
      const LearnReport& r = res.report;
      if (!p.report.empty()) {
        write_json(p.report, {{"command", "learn-sgl"},
                              {"nodes", res.graph.node_count()},
                              {"edges", res.graph.edge_count()},
                              {"density", density(res.graph)},
                              {"iterations", r.iterations},
                              {"converged", r.converged},
                              {"edges_added", r.edges_added},
                              {"alpha_prime", r.alpha_prime},
                              {"s_max_trace", trace_json(r.s_max_trace)}});
      }
      if (!p.trace.empty()) write_trace(p.trace, r.s_max_trace);
      out << "learn-sgl: " << res.graph.node_count() << " nodes, " << res.graph.edge_count()
          << " edges, density " << fmt(density(res.graph)) << ", " << r.iterations
          << " iterations" << (r.converged ? "" : " (not converged)") << ", alpha' "
          << fmt(r.alpha_prime, 6) << ", " << fmt(secs, 3) << " s -> " << p.out << '\n';
    } else if (*sf_cmd) {
      const MeasurementSet ms = read_measurements_file(p.measurements);
      sf_cfg.sgl = to_sgl_config(sf_flags);
      sf_cfg.smoother.seed = seed;
      const CandidatePool pool = initial_pool(ms, sf_flags.k);
      const auto t0 = std::chrono::steady_clock::now();
      const SfSglResult res = sf_sgl_learn(ms, pool, sf_cfg);
      const double secs = seconds_since(t0);
      write_graph_file(p.out, res.graph);
      const SfSglReport& r = res.report;
      if (!p.report.empty()) {
        write_json(p.report, {{"command", "learn-sfsgl"},
                              {"nodes", res.graph.node_count()},
                              {"edges", res.graph.edge_count()},
                              {"density", density(res.graph)},
                              {"level_sizes", r.level_sizes},
                              {"refine_edges", r.refine_edges},
                              {"coarsest_iterations", r.coarsest.iterations},
                              {"coarsest_converged", r.coarsest.converged},
                              {"alpha_prime", r.alpha_prime},
                              {"s_max_trace", trace_json(r.coarsest.s_max_trace)}});
      }
      if (!p.trace.empty()) write_trace(p.trace, r.coarsest.s_max_trace);
      out << "learn-sfsgl: " << r.level_sizes.size() << " levels, " << res.graph.node_count()
          << " nodes, " << res.graph.edge_count() << " edges, density "
          << fmt(density(res.graph)) << ", alpha' " << fmt(r.alpha_prime, 6) << ", "
          << fmt(secs, 3) << " s -> " << p.out << '\n';
    } else if (*metrics_cmd) {
      const WeightedGraph truth = read_graph_file(p.truth);
      const WeightedGraph learned = read_graph_file(p.learned);
      std::optional<MeasurementSet> ms;
      if (!p.measurements.empty()) ms = read_measurements_file(p.measurements);
      metrics_cfg.seed = seed;
      const MetricsReport r = compute_metrics(truth, learned, metrics_cfg, ms ? &ms->X : nullptr);
      if (!p.eigen.empty()) {
        auto csv = open_csv(p.eigen, "write_eigenvalues");
        csv << "index,lambda_original,lambda_learned\n";
        for (Eigen::Index i = 0; i < r.lambda_original.size(); ++i) {
          csv << i + 2 << ',' << r.lambda_original[i] << ',' << r.lambda_learned[i] << '\n';
        }
      }
      if (!p.report.empty()) {
        json doc = {{"command", "metrics"},
                    {"err_lambda", r.err_lambda},
                    {"err_resistance", r.err_resistance},
                    {"density_original", r.density_original},
                    {"density_learned", r.density_learned},
                    {"eig_count", r.eig_count},
                    {"pair_count", r.pair_count}};
        if (r.objective_original) {
          doc["objective_original"] = *r.objective_original;
          doc["objective_learned"] = *r.objective_learned;
        }
        write_json(p.report, doc);
      }
      out << "metrics: Err(lambda) " << fmt(r.err_lambda) << " over " << r.eig_count
          << " eigenvalues, Err(R) " << fmt(r.err_resistance) << " over " << r.pair_count
          << " pairs, density " << fmt(r.density_original) << " -> " << fmt(r.density_learned)
          << '\n';
    } else if (*layout_cmd) {
      const WeightedGraph g = read_graph_file(p.graph);
      EigenConfig eig;
      eig.r = 2;
      const Eigen::MatrixXd xy = spectral_layout(build_laplacian(g), eig);
      auto csv = open_csv(p.out, "write_layout");
      csv << "node,x,y\n";
      for (Eigen::Index i = 0; i < xy.rows(); ++i) {
        csv << i << ',' << xy(i, 0) << ',' << xy(i, 1) << '\n';
      }
      out << "layout: " << g.node_count() << " nodes -> " << p.out << '\n';
    } else if (*verify_cmd) {
      VerificationProblem problem = read_problem_file(p.problem);
      if (!p.graph.empty()) problem.grid = read_graph_file(p.graph);
      SolverConfig solver;
      if (solver_name == "cg") solver.method = SolverMethod::ConjugateGradient;
      const WorstCaseResult r = verify(problem, solver);
      if (!p.out.empty()) {
        auto csv = open_csv(p.out, "write_worst_case");
        csv << "query,worst_voltage\n";
        for (std::size_t i = 0; i < r.query_nodes.size(); ++i) {
          csv << r.query_nodes[i] << ',' << r.worst[i] << '\n';
        }
      }
      if (!p.report.empty()) {
        write_json(p.report, {{"command", "verify"},
                              {"nodes", problem.grid.node_count()},
                              {"ground_nodes", problem.ground_nodes.size()},
                              {"budgets", problem.constraints.budgets.size()},
                              {"query_nodes", r.query_nodes},
                              {"worst", r.worst}});
      }
      const double peak =
          r.worst.empty() ? 0.0 : *std::max_element(r.worst.begin(), r.worst.end());
      out << "verify: " << r.query_nodes.size() << " queries, max worst-case voltage "
          << fmt(peak, 6) << ", factor " << fmt(r.factor_seconds, 3) << " s, solves "
          << fmt(r.solve_seconds, 3) << " s, greedy " << fmt(r.lp_seconds, 3) << " s\n";
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << kModule << "/run: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace resnet
