#include "resnet/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "resnet/error.hpp"
#include "resnet/union_find.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "multilevel";

double row_distance(const Eigen::MatrixXd& A, NodeId s, NodeId t) {
  return (A.row(s) - A.row(t)).squaredNorm();
}

double affinity(double w, const Eigen::MatrixXd& B, NodeId s, NodeId t) {
  const double d = row_distance(B, s, t);
  return d > 0.0 ? w / d : std::numeric_limits<double>::infinity();
}

// One matching round over g. `size` holds the fine-node count behind each
// node of g; merged clusters never exceed `cap` fine nodes.
std::vector<NodeId> match_round(const WeightedGraph& g, const Eigen::MatrixXd& B,
                                const std::vector<std::size_t>& size, std::size_t cap,
                                NodeId* count) {
  const NodeId n = g.node_count();
  const Adjacency adj = build_adjacency(g);
  std::vector<NodeId> cluster(n, -1);
  std::vector<std::size_t> cluster_size;
  for (NodeId v = 0; v < n; ++v) {
    if (cluster[v] >= 0) continue;
    NodeId partner = -1;
    double best = -1.0;
    NodeId join = -1;
    double best_join = -1.0;
    for (auto k = adj.offsets[v]; k < adj.offsets[v + 1]; ++k) {
      const NodeId u = adj.neighbors[k];
      const double a = affinity(adj.weights[k], B, v, u);
      if (cluster[u] < 0) {
        if (size[v] + size[u] <= cap && (a > best || (a == best && u < partner))) {
          best = a;
          partner = u;
        }
      } else if (cluster_size[cluster[u]] + size[v] <= cap &&
                 (a > best_join || (a == best_join && cluster[u] < join))) {
        best_join = a;
        join = cluster[u];
      }
    }
    if (partner >= 0) {
      cluster[v] = cluster[partner] = static_cast<NodeId>(cluster_size.size());
      cluster_size.push_back(size[v] + size[partner]);
    } else if (join >= 0) {
      cluster[v] = join;
      cluster_size[join] += size[v];
    } else {
      cluster[v] = static_cast<NodeId>(cluster_size.size());
      cluster_size.push_back(size[v]);
    }
  }
  *count = static_cast<NodeId>(cluster_size.size());
  return cluster;
}

// Every cluster must induce a connected subgraph of g.
void check_connected_clusters(const WeightedGraph& g, const AggregationMap& map,
                              const char* op) {
  UnionFind uf(static_cast<std::size_t>(g.node_count()));
  for (const auto& e : g.edges()) {
    if (map.assignment[e.s] == map.assignment[e.t]) uf.unite(e.s, e.t);
  }
  std::vector<NodeId> root(map.coarse_count, -1);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const NodeId c = map.assignment[v];
    const auto r = static_cast<NodeId>(uf.find(v));
    if (root[c] < 0) root[c] = r;
    if (root[c] != r) {
      throw Error(ErrorKind::HierarchyInconsistency, kModule, op,
                  "cluster " + std::to_string(c) + " is not connected in the finer graph");
    }
  }
}

void check_map(const AggregationMap& map, NodeId fine_count, const char* op) {
  if (map.fine_count != fine_count ||
      static_cast<NodeId>(map.assignment.size()) != fine_count) {
    throw Error(ErrorKind::Dimension, kModule, op,
                "aggregation covers " + std::to_string(map.fine_count) +
                    " nodes, graph has " + std::to_string(fine_count));
  }
}

std::string level_prefix(std::size_t l) { return "level " + std::to_string(l) + ": "; }

}  // namespace

std::vector<std::vector<NodeId>> AggregationMap::clusters() const {
  std::vector<std::vector<NodeId>> out(coarse_count);
  for (NodeId p = 0; p < fine_count; ++p) out[assignment[p]].push_back(p);
  return out;
}

std::vector<std::size_t> AggregationMap::cluster_sizes() const {
  std::vector<std::size_t> out(coarse_count, 0);
  for (auto c : assignment) ++out[c];
  return out;
}

SparseMatrix AggregationMap::H() const {
  const auto sizes = cluster_sizes();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(fine_count);
  for (NodeId p = 0; p < fine_count; ++p) {
    t.emplace_back(assignment[p], p, 1.0 / static_cast<double>(sizes[assignment[p]]));
  }
  SparseMatrix m(coarse_count, fine_count);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix AggregationMap::H_pinv() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(fine_count);
  for (NodeId p = 0; p < fine_count; ++p) t.emplace_back(p, assignment[p], 1.0);
  SparseMatrix m(fine_count, coarse_count);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix coarse_laplacian(const SparseMatrix& L, const AggregationMap& map) {
  check_map(map, L.rows(), "coarse_laplacian");
  const SparseMatrix P = map.H_pinv();
  SparseMatrix Lc = SparseMatrix(P.transpose()) * L * P;
  Lc.prune(0.0);
  return Lc;
}

AggregationMap cluster_nodes(const WeightedGraph& g, const Eigen::MatrixXd& B,
                             int max_cluster_size) {
  if (B.rows() != g.node_count()) {
    throw Error(ErrorKind::Dimension, kModule, "cluster_nodes",
                "embedding has " + std::to_string(B.rows()) + " rows for " +
                    std::to_string(g.node_count()) + " nodes");
  }
  if (max_cluster_size < 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "cluster_nodes",
                "max_cluster_size must be positive");
  }
  const std::vector<std::size_t> unit(g.node_count(), 1);
  AggregationMap map;
  map.fine_count = g.node_count();
  map.assignment = match_round(g, B, unit, static_cast<std::size_t>(max_cluster_size),
                               &map.coarse_count);
  return map;
}

CoarseLevel aggregate(const WeightedGraph& g, const Eigen::MatrixXd& X,
                      const AggregationMap& map) {
  check_map(map, g.node_count(), "aggregate");
  if (X.rows() != g.node_count()) {
    throw Error(ErrorKind::Dimension, kModule, "aggregate",
                "features have " + std::to_string(X.rows()) + " rows for " +
                    std::to_string(g.node_count()) + " nodes");
  }
  CoarseLevel out;
  out.map = map;
  out.features = map.H() * X;
  const SparseMatrix Lc = coarse_laplacian(build_laplacian(g).matrix(), map);
  std::vector<Edge> edges;
  for (Eigen::Index c = 0; c < Lc.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(Lc, c); it; ++it) {
      const NodeId s = it.row(), t = it.col();
      if (s >= t || it.value() >= 0.0) continue;
      const double z = row_distance(out.features, s, t);
      if (!(z > 0.0)) {
        throw Error(ErrorKind::DegeneratePair, kModule, "aggregate",
                    "clusters " + std::to_string(s) + " and " + std::to_string(t) +
                        " have identical mean features");
      }
      edges.push_back({s, t, 1.0 / z});
    }
  }
  out.graph = WeightedGraph(map.coarse_count, std::move(edges));
  return out;
}

namespace {

AggregationMap cluster_to_ratio(const WeightedGraph& g, const Eigen::MatrixXd& B,
                                int cap, double ratio_target) {
  AggregationMap map = cluster_nodes(g, B, cap);
  // Further rounds on the cluster graph until the target reduction is met.
  while (static_cast<double>(map.fine_count) <
         ratio_target * static_cast<double>(map.coarse_count)) {
    const SparseMatrix Lc = coarse_laplacian(build_laplacian(g).matrix(), map);
    std::vector<Edge> edges;
    for (Eigen::Index c = 0; c < Lc.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(Lc, c); it; ++it) {
        if (it.row() < it.col() && it.value() < 0.0) edges.push_back({it.row(), it.col(), -it.value()});
      }
    }
    const WeightedGraph cg(map.coarse_count, std::move(edges));
    const Eigen::MatrixXd cB = map.H() * B;
    NodeId count = 0;
    const auto next = match_round(cg, cB, map.cluster_sizes(),
                                  static_cast<std::size_t>(cap), &count);
    if (count == map.coarse_count) break;
    for (auto& c : map.assignment) c = next[c];
    map.coarse_count = count;
  }
  return map;
}

}  // namespace

CoarseLevel coarsen_level(const WeightedGraph& g, const Eigen::MatrixXd& X,
                          const SmootherConfig& smoother, int max_cluster_size,
                          double ratio_target) {
  if (!is_connected(g)) {
    throw Error(ErrorKind::Connectivity, kModule, "coarsen_level",
                "graph to coarsen is disconnected");
  }
  const Eigen::MatrixXd B = smooth_embedding(build_laplacian(g), smoother);
  const AggregationMap map = cluster_to_ratio(g, B, max_cluster_size, ratio_target);
  check_connected_clusters(g, map, "coarsen_level");
  return aggregate(g, X, map);
}

CoarseningHierarchy build_hierarchy(const WeightedGraph& g0, const Eigen::MatrixXd& X0,
                                    const SfSglConfig& cfg) {
  if (cfg.coarsest_size < 10 || !(cfg.coarsening_ratio_target > 1.0) ||
      cfg.coarsening_ratio_target > 8.0 || cfg.max_cluster_size < 2) {
    throw Error(ErrorKind::InvalidArgument, kModule, "build_hierarchy",
                "need coarsest_size >= 10, 1 < ratio target <= 8, max_cluster_size >= 2");
  }
  if (X0.rows() != g0.node_count()) {
    throw Error(ErrorKind::Dimension, kModule, "build_hierarchy",
                "features have " + std::to_string(X0.rows()) + " rows for " +
                    std::to_string(g0.node_count()) + " nodes");
  }
  if (!is_connected(g0)) {
    throw Error(ErrorKind::Connectivity, kModule, "build_hierarchy",
                "finest graph is disconnected");
  }
  CoarseningHierarchy hier;
  hier.levels.push_back({g0, X0, {}});
  while (hier.levels.back().graph.node_count() > cfg.coarsest_size) {
    const auto& top = hier.levels.back();
    CoarseLevel next = coarsen_level(top.graph, top.features, cfg.smoother,
                                     cfg.max_cluster_size, cfg.coarsening_ratio_target);
    const double ratio = static_cast<double>(next.map.fine_count) /
                         static_cast<double>(next.map.coarse_count);
    if (ratio < 1.05) {
      if (hier.levels.size() == 1) {
        throw Error(ErrorKind::CoarseningStall, kModule, "build_hierarchy",
                    "first level reduced " + std::to_string(next.map.fine_count) +
                        " nodes only to " + std::to_string(next.map.coarse_count) +
                        "; try a larger coarsening ratio target or cluster size");
      }
      break;
    }
    hier.levels.push_back({std::move(next.graph), std::move(next.features), std::move(next.map)});
  }
  return hier;
}

WeightedGraph map_to_finer(const WeightedGraph& p_coarse, std::size_t level,
                           const CoarseningHierarchy& hier) {
  if (level < 1 || level >= hier.levels.size()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "map_to_finer",
                "level " + std::to_string(level) + " outside 1.." +
                    std::to_string(hier.levels.size() - 1));
  }
  const AggregationMap& map = hier.levels[level].map;
  const WeightedGraph& fine = hier.levels[level - 1].graph;
  if (p_coarse.node_count() != map.coarse_count) {
    throw Error(ErrorKind::Dimension, kModule, "map_to_finer",
                "coarse graph has " + std::to_string(p_coarse.node_count()) +
                    " nodes, level has " + std::to_string(map.coarse_count));
  }
  std::vector<Edge> inner;
  std::map<std::pair<NodeId, NodeId>, Edge> crossing;
  for (const auto& e : fine.edges()) {
    NodeId a = map.assignment[e.s], b = map.assignment[e.t];
    if (a == b) {
      inner.push_back(e);
      continue;
    }
    if (a > b) std::swap(a, b);
    auto [it, fresh] = crossing.try_emplace({a, b}, e);
    if (!fresh && e.w > it->second.w) it->second = e;
  }
  const WeightedGraph inner_graph(fine.node_count(), inner);
  std::vector<Edge> out;
  for (auto id : maximum_spanning_forest(inner_graph)) out.push_back(inner_graph.edge(id));
  for (const auto& e : p_coarse.edges()) {
    const auto it = crossing.find({e.s, e.t});
    if (it == crossing.end()) {
      throw Error(ErrorKind::HierarchyInconsistency, kModule, "map_to_finer",
                  "coarse edge (" + std::to_string(e.s) + ", " + std::to_string(e.t) +
                      ") has no fine edge between its clusters");
    }
    out.push_back(it->second);
  }
  return WeightedGraph(fine.node_count(), std::move(out));
}

std::vector<std::size_t> select_by_distortion(const std::vector<double>& eta,
                                              std::size_t quota) {
  if (eta.empty() || quota == 0) return {};
  std::vector<double> sorted = eta;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eta[a] > eta[b]; });
  std::vector<std::size_t> out;
  for (auto i : order) {
    if (out.size() == quota || !(eta[i] > median)) break;
    out.push_back(i);
  }
  return out;
}

WeightedGraph refine_level(const WeightedGraph& p, std::size_t level,
                           const CoarseningHierarchy& hier, const SfSglConfig& cfg,
                           RefineReport* report) {
  if (level >= hier.levels.size()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "refine_level",
                "no level " + std::to_string(level));
  }
  const WeightedGraph& g = hier.levels[level].graph;
  const Eigen::MatrixXd& X = hier.levels[level].features;
  const NodeId n = g.node_count();
  if (p.node_count() != n) {
    throw Error(ErrorKind::Dimension, kModule, "refine_level",
                "graph has " + std::to_string(p.node_count()) + " nodes, level has " +
                    std::to_string(n));
  }
  struct Candidate {
    NodeId s, t;
    double z_data;
  };
  std::vector<Candidate> candidates;
  for (const auto& e : g.edges()) {
    if (!p.has_edge(e.s, e.t)) candidates.push_back({e.s, e.t, row_distance(X, e.s, e.t)});
  }
  const auto quota = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * cfg.distortion_quota));
  std::vector<Edge> edges(p.edges().begin(), p.edges().end());
  WeightedGraph current = p;
  RefineReport local;
  for (int pass = 0; pass < cfg.refine_passes && !candidates.empty(); ++pass) {
    SmootherConfig sm = cfg.smoother;
    sm.seed += static_cast<std::uint64_t>(pass);
    const Eigen::MatrixXd B = smooth_embedding(build_laplacian(current), sm);
    std::vector<double> etas;
    etas.reserve(candidates.size());
    for (const auto& c : candidates) {
      etas.push_back(c.z_data > 0.0 ? row_distance(B, c.s, c.t) / c.z_data
                                    : std::numeric_limits<double>::infinity());
    }
    const auto picked = select_by_distortion(etas, quota);
    const std::size_t take = picked.size();
    if (take == 0) break;
    std::vector<bool> chosen(candidates.size(), false);
    for (auto i : picked) {
      const Candidate& c = candidates[i];
      chosen[i] = true;
      if (!(c.z_data > 0.0)) {
        throw Error(ErrorKind::DegeneratePair, kModule, "refine_level",
                    "candidate (" + std::to_string(c.s) + ", " + std::to_string(c.t) +
                        ") has zero data distance");
      }
      edges.push_back({c.s, c.t, 1.0 / c.z_data});
    }
    std::size_t kept = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!chosen[i]) candidates[kept++] = candidates[i];
    }
    candidates.resize(kept);
    current = WeightedGraph(n, edges);
    ++local.passes;
    local.edges_added += take;
  }
  if (report) *report = local;
  return current;
}

SfSglResult sf_sgl_learn(const MeasurementSet& ms, const CandidatePool& pool,
                         const SfSglConfig& cfg) {
  if (ms.node_count() != pool.knn_graph.node_count()) {
    throw Error(ErrorKind::Dimension, kModule, "sf_sgl_learn",
                "measurements cover " + std::to_string(ms.node_count()) +
                    " nodes but the candidate pool has " +
                    std::to_string(pool.knn_graph.node_count()));
  }
  if (!(cfg.distortion_quota > 0.0 && cfg.distortion_quota <= 1.0) || cfg.refine_passes < 0) {
    throw Error(ErrorKind::InvalidArgument, kModule, "sf_sgl_learn",
                "need 0 < distortion_quota <= 1 and refine_passes >= 0");
  }
  const CoarseningHierarchy hier = build_hierarchy(pool.knn_graph, ms.X, cfg);
  SfSglResult out;
  for (const auto& lv : hier.levels) out.report.level_sizes.push_back(lv.graph.node_count());
  if (hier.level_count() == 1) {
    auto single = sgl_learn(ms, pool, cfg.sgl);
    out.graph = std::move(single.graph);
    out.report.coarsest = std::move(single.report);
    out.report.alpha_prime = out.report.coarsest.alpha_prime;
    return out;
  }

  const std::size_t top = hier.level_count() - 1;
  WeightedGraph p;
  try {
    MeasurementSet coarse;
    coarse.X = hier.levels[top].features;
    coarse.Y.resize(0, coarse.X.cols());
    coarse.source = ms.source;
    auto learned = sgl_learn(coarse, extract_mst(hier.levels[top].graph), cfg.sgl);
    p = std::move(learned.graph);
    out.report.coarsest = std::move(learned.report);
  } catch (const Error& e) {
    throw Error(e.kind(), kModule, "sf_sgl_learn", level_prefix(top) + e.what());
  }
  for (std::size_t l = top; l >= 1; --l) {
    try {
      RefineReport rr;
      p = refine_level(map_to_finer(p, l, hier), l - 1, hier, cfg, &rr);
      out.report.refine_edges.push_back(rr.edges_added);
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, "sf_sgl_learn", level_prefix(l - 1) + e.what());
    }
  }
  if (ms.has_currents()) {
    auto scaled = spectral_scale(p, ms, cfg.sgl.solver);
    p = std::move(scaled.graph);
    out.report.alpha_prime = scaled.alpha_prime;
  }
  out.graph = std::move(p);
  return out;
}

CoarseningQuality coarsening_quality(const WeightedGraph& fine, const WeightedGraph& coarse,
                                     const AggregationMap& map, int K, double sigma) {
  check_map(map, fine.node_count(), "coarsening_quality");
  const NodeId nc = coarse.node_count();
  if (nc != map.coarse_count || K < 1 || K > std::min(nc, fine.node_count()) - 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "coarsening_quality",
                "need K in 1..min(n_l, n_{l-1}) - 1 and a matching coarse graph");
  }
  auto spectrum = [](const SparseMatrix& L) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(L), Eigen::EigenvaluesOnly);
    return Eigen::VectorXd(es.eigenvalues());
  };
  const Eigen::VectorXd lf = spectrum(build_laplacian(fine).matrix());
  const Eigen::VectorXd lc = spectrum(build_laplacian(coarse).matrix());
  CoarseningQuality q;
  q.ratios.resize(K);
  for (int i = 0; i < K; ++i) q.ratios[i] = lc[i + 1] / lf[i + 1];
  const auto sizes = map.cluster_sizes();
  Eigen::VectorXd inv_sqrt(nc);
  for (NodeId i = 0; i < nc; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(sizes[i]));
  const Eigen::MatrixXd Lc = Eigen::MatrixXd(build_laplacian(coarse).matrix());
  const Eigen::VectorXd ln = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                 inv_sqrt.asDiagonal() * Lc * inv_sqrt.asDiagonal(),
                                 Eigen::EigenvaluesOnly)
                                 .eigenvalues();
  q.normalized_ratios.resize(K);
  for (int i = 0; i < K; ++i) q.normalized_ratios[i] = ln[i + 1] / lf[i + 1];
  q.gamma1 = static_cast<double>(*std::min_element(sizes.begin(), sizes.end()));
  q.gamma2 = static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));
  q.tau = lf[K] / lf[1];
  q.epsilon = (sigma * sigma - 1.0) / (sigma * sigma + 1.0);
  const double denom = 1.0 - q.tau * q.epsilon * q.epsilon;
  const double upper = denom > 0.0 ? q.gamma2 * std::pow(1.0 + q.epsilon, 2) / denom
                                   : std::numeric_limits<double>::infinity();
  q.upper_factor = upper;
  for (int i = 0; i < K; ++i) {
    if (q.ratios[i] < q.gamma1 || q.ratios[i] > upper) q.violations.push_back(i);
  }
  return q;
}

}  // namespace resnet
