#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace resnet {

using NodeId = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct SolverConfig;

/// Undirected edge stored with s < t.
struct Edge {
  NodeId s = 0;
  NodeId t = 0;
  double w = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph with canonical edge storage.
///
/// Edges are normalized to s < t and kept sorted by (s, t). Construction
/// rejects self-loops, out-of-range endpoints, duplicate pairs and
/// non-positive or non-finite weights with a malformed-graph error.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  explicit WeightedGraph(NodeId node_count);
  WeightedGraph(NodeId node_count, std::vector<Edge> edges);

  NodeId node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_[i]; }

  // Index of edge {s, t} in edges(), if present.
  std::optional<std::size_t> find_edge(NodeId s, NodeId t) const;
  bool has_edge(NodeId s, NodeId t) const { return find_edge(s, t).has_value(); }

  WeightedGraph scaled(double factor) const;
  WeightedGraph with_edges(std::span<const Edge> extra) const;

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  NodeId node_count_ = 0;
  std::vector<Edge> edges_;
};

/// Compressed neighbor lists; edge_ids index back into WeightedGraph::edges().
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<NodeId> neighbors;
  std::vector<double> weights;
  std::vector<std::size_t> edge_ids;

  std::size_t degree(NodeId v) const { return offsets[v + 1] - offsets[v]; }
};

Adjacency build_adjacency(const WeightedGraph& g);

// Connected component label per node; labels are dense and ordered by the
// smallest node of each component.
std::vector<NodeId> component_labels(const WeightedGraph& g,
                                     NodeId* component_count = nullptr);
bool is_connected(const WeightedGraph& g);

/// L = D - W in sparse form together with the graph it came from.
class Laplacian {
 public:
  explicit Laplacian(WeightedGraph g);

  const WeightedGraph& graph() const noexcept { return graph_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  NodeId size() const noexcept { return graph_.node_count(); }

 private:
  WeightedGraph graph_;
  SparseMatrix matrix_;
};

Laplacian build_laplacian(const WeightedGraph& g);

/// Sum over edges of w (x(s) - x(t))^2.
double quadratic_form(const WeightedGraph& g, const Eigen::VectorXd& x);
double quadratic_form(const Laplacian& L, const Eigen::VectorXd& x);

/// Tr(X^T L X) as a sum of per-column quadratic forms.
double smoothness_trace(const Laplacian& L, const Eigen::MatrixXd& X);

/// ||X^T e_{s,t}||^2, the squared distance between rows s and t.
double data_distance(const Eigen::MatrixXd& X, NodeId s, NodeId t);

struct PrecisionParams {
  double sigma_sq = std::numeric_limits<double>::infinity();
  // Number of nonzero eigenvalues entering the log-determinant term;
  // unset means min(50, N - 1).
  std::optional<int> eig_budget;
};

/// Penalized log-likelihood of a Laplacian precision model for the voltage
/// matrix X (rows are nodes), truncated to eig_budget nonzero eigenvalues:
///
///   sum_{i=2}^{1+b} log(lambda_i + 1/sigma^2)
///     - (1/M) (Tr(X^T X)/sigma^2 + sum_{(s,t)} w_st ||X^T e_st||^2)
double objective_value(const WeightedGraph& g, const Eigen::MatrixXd& X,
                       const PrecisionParams& params = {});

/// e_st^T L^+ e_st via a Laplacian solve.
double effective_resistance(const WeightedGraph& g, NodeId s, NodeId t);

/// |E| / |V|
double density(const WeightedGraph& g);

}  // namespace resnet
