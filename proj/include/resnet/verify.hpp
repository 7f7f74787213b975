#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "resnet/graph.hpp"
#include "resnet/kernels.hpp"

namespace resnet {

struct Budget {
  std::vector<NodeId> nodes;
  double bound = 0.0;
};

/// Box bounds 0 <= j <= upper plus budgets sum_{p in S_k} j_p <= B_k whose
/// node sets are pairwise disjoint or nested.
struct CurrentConstraints {
  Eigen::VectorXd upper_bounds;
  std::vector<Budget> budgets;
};

struct VerificationProblem {
  WeightedGraph grid;
  std::vector<NodeId> ground_nodes;
  CurrentConstraints constraints;
  std::vector<NodeId> query_nodes;
};

/// Conductance matrix with the ground rows and columns removed.
class GroundedSystem {
 public:
  GroundedSystem(const WeightedGraph& grid, const std::vector<NodeId>& ground_nodes,
                 const SolverConfig& solver = {});

  const SparseMatrix& matrix() const noexcept { return G_; }
  NodeId node_count() const noexcept { return static_cast<NodeId>(reduced_.size()); }
  // Reduced index of an original node, -1 for ground nodes.
  NodeId reduced_index(NodeId v) const { return reduced_[v]; }
  const std::vector<NodeId>& free_nodes() const noexcept { return free_; }
  bool is_ground(NodeId v) const { return reduced_[v] < 0; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  std::vector<NodeId> reduced_;
  std::vector<NodeId> free_;
  SparseMatrix G_;
  SolverConfig solver_;
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> factor_;
};

GroundedSystem ground_system(const WeightedGraph& grid, const std::vector<NodeId>& ground_nodes,
                             const SolverConfig& solver = {});

/// z with G z = e_query, spread back over all grid nodes (zero at ground
/// nodes), so z_p is the voltage at the query node per unit current drawn at p.
Eigen::VectorXd adjoint_sensitivity(const GroundedSystem& system, NodeId query_node);

struct WorstCase {
  double value = 0.0;
  Eigen::VectorXd witness;
};

/// max z^T j over the constraints, by greedy filling in descending z (ties by
/// node id). Exact for laminar budget families.
WorstCase worst_case_voltage(const Eigen::VectorXd& z, const CurrentConstraints& c);

/// Throws UnsupportedConstraints for overlapping budgets and InvalidArgument
/// for malformed ones.
void check_constraints(const CurrentConstraints& c, NodeId node_count);

struct WorstCaseResult {
  std::vector<NodeId> query_nodes;
  std::vector<double> worst;
  std::vector<Eigen::VectorXd> witnesses;
  double factor_seconds = 0.0;
  double solve_seconds = 0.0;
  double lp_seconds = 0.0;
};

WorstCaseResult verify(const VerificationProblem& problem, const SolverConfig& solver = {});

struct SyntheticProtocol {
  double source_fraction = 0.1;
  double global_fraction = 0.3;
  int regions = 4;
  double regional_fraction = 0.5;
  double ground_fraction = 0.01;
  int query_count = 100;
};

/// Benchmark instance on a grid: uniform ground pads, uniform sources with
/// unit bounds, one global budget over all sources and disjoint regional
/// budgets over contiguous node-id ranges, uniform non-ground queries.
VerificationProblem synthetic_problem(const WeightedGraph& grid, std::uint64_t seed,
                                      const SyntheticProtocol& protocol = {});

}  // namespace resnet
