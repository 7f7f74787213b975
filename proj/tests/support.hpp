#pragma once

// Shared generators and dense oracles for the test suites. The oracles work
// on dense matrices built directly from edge lists so they stay independent
// of the sparse code paths under test.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "resnet/graph.hpp"

namespace resnet::testing {

// Random connected graph: a random spanning tree plus extra random edges,
// weights uniform in [w_lo, w_hi].
inline WeightedGraph random_connected_graph(NodeId n, std::size_t extra,
                                            std::uint64_t seed,
                                            double w_lo = 0.5, double w_hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(w_lo, w_hi);
  std::set<std::pair<NodeId, NodeId>> used;
  std::vector<Edge> edges;
  std::vector<NodeId> perm(n);
  for (NodeId i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (NodeId i = 1; i < n; ++i) {
    std::uniform_int_distribution<NodeId> pick(0, i - 1);
    NodeId a = perm[i], b = perm[pick(rng)];
    if (a > b) std::swap(a, b);
    used.insert({a, b});
    edges.push_back({a, b, weight(rng)});
  }
  const std::size_t max_edges = static_cast<std::size_t>(n * (n - 1) / 2);
  std::uniform_int_distribution<NodeId> node(0, n - 1);
  while (edges.size() < std::min(max_edges, static_cast<std::size_t>(n - 1) + extra)) {
    NodeId a = node(rng), b = node(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    edges.push_back({a, b, weight(rng)});
  }
  return WeightedGraph(n, std::move(edges));
}

inline Eigen::MatrixXd dense_laplacian(const WeightedGraph& g) {
  const NodeId n = g.node_count();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    W(e.s, e.t) += e.w;
    W(e.t, e.s) += e.w;
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (NodeId i = 0; i < n; ++i) D(i, i) = W.row(i).sum();
  return D - W;
}

// Moore-Penrose pseudoinverse through a full symmetric eigendecomposition.
inline Eigen::MatrixXd dense_pinv(const Eigen::MatrixXd& L) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const double cut = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    inv[i] = std::abs(inv[i]) > cut ? 1.0 / inv[i] : 0.0;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline double dense_resistance(const Eigen::MatrixXd& pinv, NodeId s, NodeId t) {
  return pinv(s, s) + pinv(t, t) - 2.0 * pinv(s, t);
}

inline Eigen::VectorXd dense_eigenvalues(const WeightedGraph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_laplacian(g),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = normal(rng);
  return X;
}

inline Eigen::VectorXd random_zero_mean(Eigen::Index n, std::uint64_t seed) {
  Eigen::VectorXd v = random_matrix(n, 1, seed).col(0);
  v.array() -= v.mean();
  return v;
}

inline WeightedGraph grid2d(NodeId a, NodeId b) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < a; ++i)
    for (NodeId j = 0; j < b; ++j) {
      const NodeId v = i * b + j;
      if (j + 1 < b) edges.push_back({v, v + 1, 1.0});
      if (i + 1 < a) edges.push_back({v, v + b, 1.0});
    }
  return WeightedGraph(a * b, std::move(edges));
}

inline WeightedGraph path_graph(NodeId n, double w = 1.0) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, w});
  return WeightedGraph(n, std::move(edges));
}

inline WeightedGraph cycle_graph(NodeId n) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return WeightedGraph(n, std::move(edges));
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace resnet::testing
