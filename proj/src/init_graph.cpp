#include "resnet/init_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "resnet/error.hpp"
#include "resnet/union_find.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "init-graph";
constexpr Eigen::Index kRowBlock = 256;
// Extra neighbors screened with the Gram-matrix distance before the exact
// recomputation settles the order.
constexpr Eigen::Index kShortlistSlack = 8;

double exact_distance(const Eigen::MatrixXd& X, NodeId s, NodeId t) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double d = X(s, c) - X(t, c);
    sum += d * d;
  }
  return sum;
}

[[noreturn]] void overflow(NodeId s, NodeId t) {
  throw Error(ErrorKind::WeightOverflow, kModule, "build_knn",
              "rows " + std::to_string(std::min(s, t)) + " and " +
                  std::to_string(std::max(s, t)) +
                  " coincide; weight 1/0 is undefined");
}

// Closest (s, t) with different labels, screened blockwise through the Gram
// matrix and confirmed with exact distances.
std::pair<NodeId, NodeId> closest_cross_pair(const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& sq,
                                             const std::vector<std::size_t>& label) {
  const NodeId n = X.rows();
  struct Best {
    double d = std::numeric_limits<double>::infinity();
    NodeId s = -1, t = -1;
  };
  std::vector<std::pair<double, std::pair<NodeId, NodeId>>> screened;
  for (NodeId b0 = 0; b0 < n; b0 += kRowBlock) {
    const NodeId rows = std::min<NodeId>(kRowBlock, n - b0);
    const Eigen::MatrixXd G = X.middleRows(b0, rows) * X.transpose();
    for (NodeId i = 0; i < rows; ++i) {
      const NodeId s = b0 + i;
      Best best;
      for (NodeId t = s + 1; t < n; ++t) {
        if (label[s] == label[t]) continue;
        const double d = sq[s] + sq[t] - 2.0 * G(i, t);
        if (d < best.d) best = {d, s, t};
      }
      if (best.s >= 0) screened.push_back({best.d, {best.s, best.t}});
    }
  }
  std::sort(screened.begin(), screened.end());
  Best best;
  const std::size_t look = std::min<std::size_t>(screened.size(), 16);
  for (std::size_t i = 0; i < look; ++i) {
    const auto [s, t] = screened[i].second;
    const double d = exact_distance(X, s, t);
    if (d < best.d || (d == best.d && std::pair(s, t) < std::pair(best.s, best.t))) {
      best = {d, s, t};
    }
  }
  return {best.s, best.t};
}

}  // namespace

KnnGraph build_knn(const Eigen::MatrixXd& X, const KnnConfig& cfg) {
  const NodeId n = X.rows();
  if (cfg.k < 1 || n < cfg.k + 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "build_knn",
                "need 1 <= k < N (k = " + std::to_string(cfg.k) +
                    ", N = " + std::to_string(n) + ")");
  }
  if (!X.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "build_knn",
                "feature matrix has non-finite entries");
  }
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  const Eigen::Index shortlist = std::min<Eigen::Index>(n - 1, cfg.k + kShortlistSlack);

  std::set<std::pair<NodeId, NodeId>> pairs;
  std::vector<std::pair<double, NodeId>> cand(static_cast<std::size_t>(n));
  for (NodeId b0 = 0; b0 < n; b0 += kRowBlock) {
    const NodeId rows = std::min<NodeId>(kRowBlock, n - b0);
    const Eigen::MatrixXd G = X.middleRows(b0, rows) * X.transpose();
    for (NodeId i = 0; i < rows; ++i) {
      const NodeId s = b0 + i;
      cand.clear();
      for (NodeId t = 0; t < n; ++t) {
        if (t != s) cand.push_back({sq[s] + sq[t] - 2.0 * G(i, t), t});
      }
      std::partial_sort(cand.begin(), cand.begin() + shortlist, cand.end());
      for (Eigen::Index j = 0; j < shortlist; ++j) {
        cand[j].first = exact_distance(X, s, cand[j].second);
      }
      std::sort(cand.begin(), cand.begin() + shortlist);
      for (int j = 0; j < cfg.k; ++j) {
        const NodeId t = cand[j].second;
        if (cand[j].first == 0.0) overflow(s, t);
        pairs.insert({std::min(s, t), std::max(s, t)});
      }
    }
  }

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [s, t] : pairs) edges.push_back({s, t, 1.0 / exact_distance(X, s, t)});

  KnnGraph out;
  UnionFind uf(static_cast<std::size_t>(n));
  std::size_t components = static_cast<std::size_t>(n);
  for (const auto& e : edges) components -= uf.unite(e.s, e.t);
  while (components > 1) {
    std::vector<std::size_t> label(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) label[v] = uf.find(v);
    const auto [s, t] = closest_cross_pair(X, sq, label);
    const double d = exact_distance(X, s, t);
    if (d == 0.0) overflow(s, t);
    edges.push_back({s, t, 1.0 / d});
    uf.unite(s, t);
    --components;
    ++out.augmentations;
  }
  out.graph = WeightedGraph(n, std::move(edges));
  return out;
}

WeightedGraph CandidatePool::tree() const {
  std::vector<Edge> edges;
  edges.reserve(tree_edges.size());
  for (auto id : tree_edges) edges.push_back(knn_graph.edge(id));
  return WeightedGraph(knn_graph.node_count(), std::move(edges));
}

std::vector<std::size_t> maximum_spanning_forest(const WeightedGraph& g) {
  std::vector<std::size_t> order(g.edge_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Edge ids already follow (s, t) order, so a stable sort on weight alone
  // gives the (weight desc, s asc, t asc) tie rule.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.edge(a).w > g.edge(b).w;
  });
  UnionFind uf(static_cast<std::size_t>(g.node_count()));
  std::vector<std::size_t> tree;
  for (auto id : order) {
    if (uf.unite(g.edge(id).s, g.edge(id).t)) tree.push_back(id);
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

CandidatePool extract_mst(const WeightedGraph& g) {
  CandidatePool pool;
  pool.tree_edges = maximum_spanning_forest(g);
  if (g.node_count() > 0 &&
      pool.tree_edges.size() + 1 != static_cast<std::size_t>(g.node_count())) {
    throw Error(ErrorKind::Connectivity, kModule, "extract_mst",
                "graph is disconnected; no spanning tree exists");
  }
  pool.knn_graph = g;
  std::size_t next = 0;
  for (std::size_t id = 0; id < g.edge_count(); ++id) {
    if (next < pool.tree_edges.size() && pool.tree_edges[next] == id) {
      ++next;
    } else {
      pool.offtree_edges.push_back(id);
    }
  }
  return pool;
}

}  // namespace resnet
