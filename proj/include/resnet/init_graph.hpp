#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "resnet/graph.hpp"

namespace resnet {

struct KnnConfig {
  int k = 5;
};

struct KnnGraph {
  WeightedGraph graph;
  // Edges added to join components the neighbor search left disconnected.
  std::size_t augmentations = 0;
};

/// Exact k-nearest-neighbor graph over the rows of X (Euclidean).
///
/// An edge joins s and t when either is among the other's k nearest rows;
/// its weight is 1 / ||X(s,:) - X(t,:)||^2. Ties in distance go to the
/// smaller node id. If the union graph is disconnected, the closest pair of
/// rows across different components is joined until one component remains.
KnnGraph build_knn(const Eigen::MatrixXd& X, const KnnConfig& cfg = {});

/// kNN graph split into a maximum spanning tree and the remaining edges.
struct CandidatePool {
  WeightedGraph knn_graph;
  std::vector<std::size_t> tree_edges;     // ascending edge ids
  std::vector<std::size_t> offtree_edges;  // ascending edge ids

  WeightedGraph tree() const;
};

/// Kruskal on descending weight, ties by (s, t) ascending.
CandidatePool extract_mst(const WeightedGraph& g);

/// Edge ids of a maximum spanning forest of g, ascending.
std::vector<std::size_t> maximum_spanning_forest(const WeightedGraph& g);

}  // namespace resnet
