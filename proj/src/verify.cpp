#include "resnet/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/IterativeLinearSolvers>

#include "resnet/error.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "vectorless-verify";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string node_list(const std::vector<NodeId>& nodes) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(nodes.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + std::to_string(nodes[i]);
  if (nodes.size() > shown) out += ", ... (" + std::to_string(nodes.size()) + " nodes)";
  return out;
}

}  // namespace

GroundedSystem::GroundedSystem(const WeightedGraph& grid, const std::vector<NodeId>& ground_nodes,
                               const SolverConfig& solver)
    : reduced_(grid.node_count(), 0), solver_(solver) {
  const NodeId n = grid.node_count();
  if (ground_nodes.empty()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "ground_system", "no ground nodes given");
  }
  for (auto g : ground_nodes) {
    if (g < 0 || g >= n) {
      throw Error(ErrorKind::InvalidArgument, kModule, "ground_system",
                  "ground node " + std::to_string(g) + " out of range");
    }
    reduced_[g] = -1;
  }
  // Every component needs a ground node, otherwise its block is singular.
  NodeId count = 0;
  const auto label = component_labels(grid, &count);
  std::vector<bool> grounded(count, false);
  for (auto g : ground_nodes) grounded[label[g]] = true;
  std::vector<NodeId> floating;
  for (NodeId v = 0; v < n; ++v)
    if (!grounded[label[v]]) floating.push_back(v);
  if (!floating.empty()) {
    throw Error(ErrorKind::FloatingIsland, kModule, "ground_system",
                "nodes without a path to ground: " + node_list(floating));
  }
  for (NodeId v = 0; v < n; ++v) {
    if (reduced_[v] < 0) continue;
    reduced_[v] = static_cast<NodeId>(free_.size());
    free_.push_back(v);
  }
  const Laplacian lap = build_laplacian(grid);
  const SparseMatrix& L = lap.matrix();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(L.nonZeros()));
  for (Eigen::Index c = 0; c < L.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(L, c); it; ++it) {
      const NodeId a = reduced_[it.row()], b = reduced_[it.col()];
      if (a >= 0 && b >= 0) t.emplace_back(a, b, it.value());
    }
  }
  G_.resize(static_cast<NodeId>(free_.size()), static_cast<NodeId>(free_.size()));
  G_.setFromTriplets(t.begin(), t.end());
  if (solver_.method == SolverMethod::DirectFactorization && !free_.empty()) {
    factor_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(G_);
    if (factor_->info() != Eigen::Success) {
      throw Error(ErrorKind::SolverDivergence, kModule, "ground_system",
                  "Cholesky factorization of the grounded system failed");
    }
  }
}

Eigen::VectorXd GroundedSystem::solve(const Eigen::VectorXd& b) const {
  if (factor_) return factor_->solve(b);
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(G_);
  cg.setTolerance(solver_.tolerance);
  cg.setMaxIterations(solver_.max_iterations > 0 ? solver_.max_iterations
                                                 : 10 * static_cast<int>(G_.rows()));
  Eigen::VectorXd x = cg.solve(b);
  if (cg.info() != Eigen::Success) {
    throw SolverError("adjoint_sensitivity", "conjugate gradient did not converge", cg.error());
  }
  return x;
}

GroundedSystem ground_system(const WeightedGraph& grid, const std::vector<NodeId>& ground_nodes,
                             const SolverConfig& solver) {
  return GroundedSystem(grid, ground_nodes, solver);
}

Eigen::VectorXd adjoint_sensitivity(const GroundedSystem& system, NodeId query_node) {
  if (query_node < 0 || query_node >= system.node_count()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "adjoint_sensitivity",
                "query node " + std::to_string(query_node) + " out of range");
  }
  if (system.is_ground(query_node)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "adjoint_sensitivity",
                "query node " + std::to_string(query_node) + " is grounded");
  }
  const auto& free = system.free_nodes();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<NodeId>(free.size()));
  e[system.reduced_index(query_node)] = 1.0;
  const Eigen::VectorXd zr = system.solve(e);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(system.node_count());
  for (std::size_t i = 0; i < free.size(); ++i) {
    // Entries of an M-matrix inverse are nonnegative; clip rounding noise.
    z[free[i]] = std::max(0.0, zr[static_cast<NodeId>(i)]);
  }
  return z;
}

void check_constraints(const CurrentConstraints& c, NodeId node_count) {
  if (c.upper_bounds.size() != node_count) {
    throw Error(ErrorKind::Dimension, kModule, "check_constraints",
                "bounds cover " + std::to_string(c.upper_bounds.size()) + " nodes, grid has " +
                    std::to_string(node_count));
  }
  for (NodeId p = 0; p < node_count; ++p) {
    if (!(c.upper_bounds[p] >= 0.0) || !std::isfinite(c.upper_bounds[p])) {
      throw Error(ErrorKind::InvalidArgument, kModule, "check_constraints",
                  "node " + std::to_string(p) + " has an invalid current bound");
    }
  }
  std::vector<std::vector<bool>> member(c.budgets.size());
  for (std::size_t k = 0; k < c.budgets.size(); ++k) {
    const auto& b = c.budgets[k];
    if (!(b.bound > 0.0) || !std::isfinite(b.bound) || b.nodes.empty()) {
      throw Error(ErrorKind::InvalidArgument, kModule, "check_constraints",
                  "budget " + std::to_string(k) + " needs nodes and a positive bound");
    }
    member[k].assign(node_count, false);
    for (auto p : b.nodes) {
      if (p < 0 || p >= node_count || member[k][p]) {
        throw Error(ErrorKind::InvalidArgument, kModule, "check_constraints",
                    "budget " + std::to_string(k) + " lists node " + std::to_string(p) +
                        " out of range or twice");
      }
      member[k][p] = true;
    }
  }
  for (std::size_t a = 0; a < c.budgets.size(); ++a) {
    for (std::size_t b = a + 1; b < c.budgets.size(); ++b) {
      std::size_t shared = 0;
      for (auto p : c.budgets[a].nodes) shared += member[b][p] ? 1 : 0;
      if (shared != 0 && shared != c.budgets[a].nodes.size() &&
          shared != c.budgets[b].nodes.size()) {
        throw Error(ErrorKind::UnsupportedConstraints, kModule, "check_constraints",
                    "budgets " + std::to_string(a) + " and " + std::to_string(b) +
                        " overlap without nesting");
      }
    }
  }
}

WorstCase worst_case_voltage(const Eigen::VectorXd& z, const CurrentConstraints& c) {
  const NodeId n = z.size();
  check_constraints(c, n);
  std::vector<std::vector<std::size_t>> budgets_of(n);
  for (std::size_t k = 0; k < c.budgets.size(); ++k)
    for (auto p : c.budgets[k].nodes) budgets_of[p].push_back(k);
  std::vector<double> remaining(c.budgets.size());
  for (std::size_t k = 0; k < c.budgets.size(); ++k) remaining[k] = c.budgets[k].bound;

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return z[a] > z[b]; });
  WorstCase out;
  out.witness = Eigen::VectorXd::Zero(n);
  for (auto p : order) {
    if (!(z[p] > 0.0)) break;
    double j = c.upper_bounds[p];
    for (auto k : budgets_of[p]) j = std::min(j, remaining[k]);
    if (j <= 0.0) continue;
    for (auto k : budgets_of[p]) remaining[k] = std::max(0.0, remaining[k] - j);
    out.witness[p] = j;
  }
  out.value = z.dot(out.witness);
  return out;
}

WorstCaseResult verify(const VerificationProblem& problem, const SolverConfig& solver) {
  const NodeId n = problem.grid.node_count();
  check_constraints(problem.constraints, n);
  WorstCaseResult out;
  auto t0 = Clock::now();
  const GroundedSystem system(problem.grid, problem.ground_nodes, solver);
  out.factor_seconds = seconds_since(t0);
  for (auto q : problem.query_nodes) {
    try {
      t0 = Clock::now();
      const Eigen::VectorXd z = adjoint_sensitivity(system, q);
      out.solve_seconds += seconds_since(t0);
      t0 = Clock::now();
      auto wc = worst_case_voltage(z, problem.constraints);
      out.lp_seconds += seconds_since(t0);
      out.query_nodes.push_back(q);
      out.worst.push_back(wc.value);
      out.witnesses.push_back(std::move(wc.witness));
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, "verify", "query node " + std::to_string(q) + ": " + e.what());
    }
  }
  return out;
}

VerificationProblem synthetic_problem(const WeightedGraph& grid, std::uint64_t seed,
                                      const SyntheticProtocol& protocol) {
  const NodeId n = grid.node_count();
  if (n < 4 || protocol.regions < 1 || !(protocol.source_fraction > 0.0) ||
      !(protocol.ground_fraction > 0.0) || protocol.query_count < 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "synthetic_problem",
                "need at least 4 nodes and positive fractions, regions and queries");
  }
  std::mt19937_64 rng(seed);
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  auto count_of = [&](double f) {
    return std::max<NodeId>(1, static_cast<NodeId>(std::ceil(f * static_cast<double>(n) - 1e-9)));
  };

  VerificationProblem pb;
  pb.grid = grid;
  std::sample(all.begin(), all.end(), std::back_inserter(pb.ground_nodes),
              count_of(protocol.ground_fraction), rng);
  std::vector<bool> ground(n, false);
  for (auto g : pb.ground_nodes) ground[g] = true;
  std::vector<NodeId> free;
  for (auto v : all)
    if (!ground[v]) free.push_back(v);

  std::vector<NodeId> sources;
  std::sample(free.begin(), free.end(), std::back_inserter(sources),
              std::min<NodeId>(count_of(protocol.source_fraction),
                               static_cast<NodeId>(free.size())),
              rng);
  auto& c = pb.constraints;
  c.upper_bounds = Eigen::VectorXd::Zero(n);
  for (auto s : sources) c.upper_bounds[s] = 1.0;
  const auto total = static_cast<double>(sources.size());
  c.budgets.push_back({sources, protocol.global_fraction * total});
  // Regions are contiguous node-id ranges.
  for (int r = 0; r < protocol.regions; ++r) {
    const NodeId lo = n * r / protocol.regions, hi = n * (r + 1) / protocol.regions;
    Budget b;
    for (auto s : sources)
      if (s >= lo && s < hi) b.nodes.push_back(s);
    if (b.nodes.empty()) continue;
    b.bound = protocol.regional_fraction * static_cast<double>(b.nodes.size());
    c.budgets.push_back(std::move(b));
  }
  std::sample(free.begin(), free.end(), std::back_inserter(pb.query_nodes),
              std::min<NodeId>(protocol.query_count, static_cast<NodeId>(free.size())), rng);
  return pb;
}

}  // namespace resnet
