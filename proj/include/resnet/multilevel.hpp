#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "resnet/graph.hpp"
#include "resnet/init_graph.hpp"
#include "resnet/kernels.hpp"
#include "resnet/measurements.hpp"
#include "resnet/sgl.hpp"

namespace resnet {

/// Assignment of fine nodes to coarse clusters. Row i of H averages the
/// fine nodes of cluster i; column i of H^+ is the indicator of cluster i.
struct AggregationMap {
  NodeId fine_count = 0;
  NodeId coarse_count = 0;
  std::vector<NodeId> assignment;  // fine node -> cluster

  std::vector<std::vector<NodeId>> clusters() const;
  std::vector<std::size_t> cluster_sizes() const;
  SparseMatrix H() const;
  SparseMatrix H_pinv() const;
};

struct HierarchyLevel {
  WeightedGraph graph;
  Eigen::MatrixXd features;
  AggregationMap map;  // empty at level 0
};

struct CoarseningHierarchy {
  std::vector<HierarchyLevel> levels;

  std::size_t level_count() const { return levels.size(); }
};

struct SfSglConfig {
  NodeId coarsest_size = 500;
  double coarsening_ratio_target = 2.0;
  // Candidates added per refinement pass: ceil(n * distortion_quota).
  double distortion_quota = 1e-3;
  int refine_passes = 3;
  int max_cluster_size = 8;
  SmootherConfig smoother{};
  SglConfig sgl{};
};

struct CoarseLevel {
  AggregationMap map;
  WeightedGraph graph;
  Eigen::MatrixXd features;
};

/// Galerkin product (H^+)^T L H^+ on an aggregation; the coarse weight
/// between two clusters is the sum of the fine weights crossing them.
SparseMatrix coarse_laplacian(const SparseMatrix& L, const AggregationMap& map);

/// Embedding-aware heavy-edge matching on g: nodes in ascending order pair
/// with their unassigned neighbor of largest w / ||B(s,:) - B(t,:)||^2. A node
/// whose neighbors are all taken joins the best neighboring cluster below
/// max_cluster_size, or stays alone.
AggregationMap cluster_nodes(const WeightedGraph& g, const Eigen::MatrixXd& B,
                             int max_cluster_size = 8);

/// Coarse graph from an aggregation: edge structure of (H^+)^T L H^+ with
/// weights 1 / ||X_c(s,:) - X_c(t,:)||^2 where X_c = H X.
CoarseLevel aggregate(const WeightedGraph& g, const Eigen::MatrixXd& X,
                      const AggregationMap& map);

/// Smoothed embedding, clustering and aggregation of one level. Matching
/// rounds repeat on the cluster graph until n / n_coarse reaches
/// ratio_target or a round merges nothing.
CoarseLevel coarsen_level(const WeightedGraph& g, const Eigen::MatrixXd& X,
                          const SmootherConfig& smoother = {},
                          int max_cluster_size = 8, double ratio_target = 2.0);

CoarseningHierarchy build_hierarchy(const WeightedGraph& g0, const Eigen::MatrixXd& X0,
                                    const SfSglConfig& cfg = {});

/// Graph on the nodes of level l - 1: a maximum spanning tree of each
/// cluster's induced subgraph plus, for every edge of p_coarse, the heaviest
/// fine edge between the two clusters. Weights come from level l - 1.
WeightedGraph map_to_finer(const WeightedGraph& p_coarse, std::size_t level,
                           const CoarseningHierarchy& hier);

struct RefineReport {
  int passes = 0;
  std::size_t edges_added = 0;
};

/// Positions of the values above the median of eta, largest first (ties by
/// position), at most quota of them.
std::vector<std::size_t> select_by_distortion(const std::vector<double>& eta,
                                              std::size_t quota);

/// Adds level edges missing from p whose distortion ||B'^T e||^2 / z_data in a
/// smoothed embedding B' of p is above the median, at most
/// ceil(n * distortion_quota) per pass, with weight 1 / z_data.
WeightedGraph refine_level(const WeightedGraph& p, std::size_t level,
                           const CoarseningHierarchy& hier, const SfSglConfig& cfg,
                           RefineReport* report = nullptr);

struct SfSglReport {
  LearnReport coarsest;
  std::vector<NodeId> level_sizes;
  std::vector<std::size_t> refine_edges;  // per level, finest last
  double alpha_prime = 1.0;
};

struct SfSglResult {
  WeightedGraph graph;
  SfSglReport report;
};

SfSglResult sf_sgl_learn(const MeasurementSet& ms, const CandidatePool& pool,
                         const SfSglConfig& cfg = {});

struct CoarseningQuality {
  Eigen::VectorXd ratios;  // lambda_i(coarse) / lambda_i(fine), i = 2 .. K+1
  // Same with the coarse eigenvalues taken from L_c x = lambda diag(|S|) x,
  // the Rayleigh quotients of the prolongated vectors H^+ x.
  Eigen::VectorXd normalized_ratios;
  double gamma1 = 0.0;     // smallest cluster size
  double gamma2 = 0.0;     // largest cluster size
  double tau = 0.0;
  double epsilon = 0.0;
  double upper_factor = 0.0;  // gamma2 (1 + eps)^2 / (1 - tau eps^2)
  std::vector<int> violations;  // 0-based indices outside the band
};

/// Eigenvalue sandwich check between a fine graph and its coarsening, with
/// coarse the graph of (H^+)^T L H^+ (not the reweighted level graph). sigma
/// controls epsilon = (sigma^2 - 1) / (sigma^2 + 1).
CoarseningQuality coarsening_quality(const WeightedGraph& fine, const WeightedGraph& coarse,
                                     const AggregationMap& map, int K,
                                     double sigma = 1.1);

}  // namespace resnet
