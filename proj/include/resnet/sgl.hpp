#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "resnet/graph.hpp"
#include "resnet/init_graph.hpp"
#include "resnet/kernels.hpp"
#include "resnet/measurements.hpp"

namespace resnet {

enum class EmbeddingKind { Eigensubspace, Smoothed };

struct EmbeddingMatrix {
  Eigen::MatrixXd coords;  // N x r
  EmbeddingKind kind = EmbeddingKind::Eigensubspace;
  bool scaled = false;

  Eigen::Index dimension() const { return coords.cols(); }
};

/// Columns u_i / sqrt(lambda_i + 1/sigma^2) for i = 2 .. r+1.
EmbeddingMatrix eigen_embedding(const WeightedGraph& g, int r,
                                double sigma_sq = std::numeric_limits<double>::infinity(),
                                const EigenConfig& eig = {});

/// ||emb^T e_st||^2
double embedding_distance(const EmbeddingMatrix& emb, NodeId s, NodeId t);

/// z_emb - z_data / M, the derivative of the objective with respect to the
/// weight of edge (s, t).
double edge_sensitivity(const EmbeddingMatrix& emb, const Eigen::MatrixXd& X,
                        NodeId s, NodeId t);

/// M z_emb / z_data. Throws DegeneratePair when rows s and t of X coincide.
double edge_distortion(const EmbeddingMatrix& emb, const Eigen::MatrixXd& X,
                       NodeId s, NodeId t, Eigen::Index M);

struct SglConfig {
  int r = 5;
  double tol = 1e-12;
  double beta = 1e-3;
  int max_iterations = 500;
  double sigma_sq = std::numeric_limits<double>::infinity();
  // Constant c in w = c / z_data for tree and added edges; unset means M,
  // which puts a tree edge exactly at distortion 1.
  std::optional<double> weight_scale;
  EigenConfig eig{};
  SolverConfig solver{};
};

struct LearnReport {
  int iterations = 0;
  std::vector<double> s_max_trace;
  std::size_t edges_added = 0;
  double alpha_prime = 1.0;
  bool converged = false;
};

struct ScaledGraph {
  WeightedGraph graph;
  double alpha_prime = 1.0;
};

/// alpha' = (1/M) sum_i (y_i^T x~_i) / (y_i^T x_i) with x~_i = L_learned^+ y_i;
/// returns the learned graph with every weight multiplied by alpha'.
ScaledGraph spectral_scale(const WeightedGraph& g_learned, const MeasurementSet& ms,
                           const SolverConfig& solver = {});

struct SglResult {
  WeightedGraph graph;
  LearnReport report;
};

/// Densifies the spanning tree of `pool` with its most sensitive off-tree
/// candidates until no candidate has sensitivity above cfg.tol, then applies
/// spectral scaling when the measurements carry currents.
SglResult sgl_learn(const MeasurementSet& ms, const CandidatePool& pool,
                    const SglConfig& cfg = {});

}  // namespace resnet
