#include "resnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "resnet/error.hpp"
#include "resnet/kernels.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "graph-core";

bool edge_less(const Edge& a, const Edge& b) {
  return a.s != b.s ? a.s < b.s : a.t < b.t;
}

std::string pair_name(NodeId s, NodeId t) {
  return "(" + std::to_string(s) + "," + std::to_string(t) + ")";
}

}  // namespace

WeightedGraph::WeightedGraph(NodeId node_count) : node_count_(node_count) {
  if (node_count < 0) {
    throw Error(ErrorKind::MalformedGraph, kModule, "build_graph",
                "negative node count");
  }
}

WeightedGraph::WeightedGraph(NodeId node_count, std::vector<Edge> edges)
    : WeightedGraph(node_count) {
  for (auto& e : edges) {
    if (e.s == e.t) {
      throw Error(ErrorKind::MalformedGraph, kModule, "build_graph",
                  "self-loop at node " + std::to_string(e.s));
    }
    if (e.s > e.t) std::swap(e.s, e.t);
    if (e.s < 0 || e.t >= node_count_) {
      throw Error(ErrorKind::MalformedGraph, kModule, "build_graph",
                  "edge " + pair_name(e.s, e.t) + " out of range for " +
                      std::to_string(node_count_) + " nodes");
    }
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      throw Error(ErrorKind::MalformedGraph, kModule, "build_graph",
                  "edge " + pair_name(e.s, e.t) +
                      " has non-positive or non-finite weight");
    }
  }
  std::sort(edges.begin(), edges.end(), edge_less);
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].s == edges[i - 1].s && edges[i].t == edges[i - 1].t) {
      throw Error(ErrorKind::MalformedGraph, kModule, "build_graph",
                  "duplicate edge " + pair_name(edges[i].s, edges[i].t));
    }
  }
  edges_ = std::move(edges);
}

std::optional<std::size_t> WeightedGraph::find_edge(NodeId s, NodeId t) const {
  if (s > t) std::swap(s, t);
  const Edge key{s, t, 0.0};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key, edge_less);
  if (it != edges_.end() && it->s == s && it->t == t) {
    return static_cast<std::size_t>(it - edges_.begin());
  }
  return std::nullopt;
}

WeightedGraph WeightedGraph::scaled(double factor) const {
  std::vector<Edge> out(edges_.begin(), edges_.end());
  for (auto& e : out) e.w *= factor;
  return WeightedGraph(node_count_, std::move(out));
}

WeightedGraph WeightedGraph::with_edges(std::span<const Edge> extra) const {
  std::vector<Edge> out(edges_.begin(), edges_.end());
  out.insert(out.end(), extra.begin(), extra.end());
  return WeightedGraph(node_count_, std::move(out));
}

Adjacency build_adjacency(const WeightedGraph& g) {
  const auto n = static_cast<std::size_t>(g.node_count());
  Adjacency adj;
  adj.offsets.assign(n + 1, 0);
  for (const auto& e : g.edges()) {
    ++adj.offsets[e.s + 1];
    ++adj.offsets[e.t + 1];
  }
  std::partial_sum(adj.offsets.begin(), adj.offsets.end(), adj.offsets.begin());
  const std::size_t total = adj.offsets[n];
  adj.neighbors.resize(total);
  adj.weights.resize(total);
  adj.edge_ids.resize(total);
  std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  // With edges sorted by (s, t), node v first receives its smaller neighbors
  // (from edges (u, v)) and then its larger ones, so each list is ascending.
  for (std::size_t id = 0; id < g.edge_count(); ++id) {
    const auto& e = g.edge(id);
    for (const auto& [from, to] : {std::pair{e.s, e.t}, std::pair{e.t, e.s}}) {
      const std::size_t slot = cursor[from]++;
      adj.neighbors[slot] = to;
      adj.weights[slot] = e.w;
      adj.edge_ids[slot] = id;
    }
  }
  return adj;
}

std::vector<NodeId> component_labels(const WeightedGraph& g,
                                     NodeId* component_count) {
  const NodeId n = g.node_count();
  const Adjacency adj = build_adjacency(g);
  std::vector<NodeId> label(n, -1);
  std::vector<NodeId> stack;
  NodeId next = 0;
  for (NodeId root = 0; root < n; ++root) {
    if (label[root] >= 0) continue;
    label[root] = next;
    stack.push_back(root);
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      for (auto k = adj.offsets[v]; k < adj.offsets[v + 1]; ++k) {
        const NodeId u = adj.neighbors[k];
        if (label[u] < 0) {
          label[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  if (component_count) *component_count = next;
  return label;
}

bool is_connected(const WeightedGraph& g) {
  NodeId count = 0;
  component_labels(g, &count);
  return count <= 1;
}

Laplacian::Laplacian(WeightedGraph g) : graph_(std::move(g)) {
  const NodeId n = graph_.node_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * graph_.edge_count() + static_cast<std::size_t>(n));
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph_.edges()) {
    triplets.emplace_back(e.s, e.t, -e.w);
    triplets.emplace_back(e.t, e.s, -e.w);
    diag[e.s] += e.w;
    diag[e.t] += e.w;
  }
  for (NodeId v = 0; v < n; ++v) triplets.emplace_back(v, v, diag[v]);
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
}

Laplacian build_laplacian(const WeightedGraph& g) { return Laplacian(g); }

double quadratic_form(const WeightedGraph& g, const Eigen::VectorXd& x) {
  if (x.size() != g.node_count()) {
    throw Error(ErrorKind::Dimension, kModule, "quadratic_form",
                "vector length " + std::to_string(x.size()) + " != N = " +
                    std::to_string(g.node_count()));
  }
  double sum = 0.0;
  for (const auto& e : g.edges()) {
    const double d = x[e.s] - x[e.t];
    sum += e.w * d * d;
  }
  return sum;
}

double quadratic_form(const Laplacian& L, const Eigen::VectorXd& x) {
  return quadratic_form(L.graph(), x);
}

double smoothness_trace(const Laplacian& L, const Eigen::MatrixXd& X) {
  if (X.rows() != L.size()) {
    throw Error(ErrorKind::Dimension, kModule, "smoothness_trace",
                "matrix has " + std::to_string(X.rows()) + " rows, N = " +
                    std::to_string(L.size()));
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    sum += quadratic_form(L.graph(), X.col(i));
  }
  return sum;
}

double data_distance(const Eigen::MatrixXd& X, NodeId s, NodeId t) {
  return (X.row(s) - X.row(t)).squaredNorm();
}

double objective_value(const WeightedGraph& g, const Eigen::MatrixXd& X,
                       const PrecisionParams& params) {
  const NodeId n = g.node_count();
  if (X.rows() != n) {
    throw Error(ErrorKind::Dimension, kModule, "objective_value",
                "X has " + std::to_string(X.rows()) + " rows, N = " +
                    std::to_string(n));
  }
  if (!(params.sigma_sq > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "objective_value",
                "sigma_sq must be positive");
  }
  const int budget =
      params.eig_budget.value_or(static_cast<int>(std::min<NodeId>(50, n - 1)));
  if (budget < 1 || budget > n - 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "objective_value",
                "eig_budget " + std::to_string(budget) + " outside [1, N-1]");
  }
  if (!is_connected(g)) {
    throw Error(ErrorKind::Connectivity, kModule, "objective_value",
                "graph is disconnected; lambda_2 = 0");
  }
  const double inv_var = std::isinf(params.sigma_sq) ? 0.0 : 1.0 / params.sigma_sq;

  EigenConfig ecfg;
  ecfg.r = budget;
  const EigenPairs pairs = eigen_pairs(build_laplacian(g), ecfg);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < pairs.values.size(); ++i) {
    logdet += std::log(pairs.values[i] + inv_var);
  }

  double fit = 0.0;
  for (const auto& e : g.edges()) fit += e.w * data_distance(X, e.s, e.t);
  if (inv_var > 0.0) fit += X.squaredNorm() * inv_var;
  return logdet - fit / static_cast<double>(X.cols());
}

double effective_resistance(const WeightedGraph& g, NodeId s, NodeId t) {
  const NodeId n = g.node_count();
  if (s < 0 || t < 0 || s >= n || t >= n || s == t) {
    throw Error(ErrorKind::InvalidArgument, kModule, "effective_resistance",
                "need distinct nodes in range, got " + pair_name(s, t));
  }
  NodeId count = 0;
  const auto label = component_labels(g, &count);
  if (label[s] != label[t]) {
    throw Error(ErrorKind::InfiniteResistance, kModule, "effective_resistance",
                "nodes " + pair_name(s, t) + " are in different components");
  }
  if (count == 1) return ResistanceCalculator(g).resistance(s, t);

  // Restrict to the component holding s and t.
  std::vector<NodeId> local(n, -1);
  NodeId m = 0;
  for (NodeId v = 0; v < n; ++v) {
    if (label[v] == label[s]) local[v] = m++;
  }
  std::vector<Edge> sub;
  for (const auto& e : g.edges()) {
    if (local[e.s] >= 0) sub.push_back({local[e.s], local[e.t], e.w});
  }
  return ResistanceCalculator(WeightedGraph(m, std::move(sub)))
      .resistance(local[s], local[t]);
}

double density(const WeightedGraph& g) {
  if (g.node_count() == 0) return 0.0;
  return static_cast<double>(g.edge_count()) /
         static_cast<double>(g.node_count());
}

}  // namespace resnet
