#include "resnet/sgl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "resnet/error.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "sgl-learn";

double row_distance(const Eigen::MatrixXd& A, NodeId s, NodeId t) {
  return (A.row(s) - A.row(t)).squaredNorm();
}

void check_pair(NodeId n, NodeId s, NodeId t, const char* op) {
  if (s == t || s < 0 || t < 0 || s >= n || t >= n) {
    throw Error(ErrorKind::InvalidArgument, kModule, op,
                "need two distinct nodes in range, got (" + std::to_string(s) +
                    ", " + std::to_string(t) + ")");
  }
}

struct Candidate {
  NodeId s, t;
  double z_data;
  double score = 0.0;
};

}  // namespace

EmbeddingMatrix eigen_embedding(const WeightedGraph& g, int r, double sigma_sq,
                                const EigenConfig& eig) {
  EigenConfig cfg = eig;
  cfg.r = r;
  const EigenPairs pairs = eigen_pairs(build_laplacian(g), cfg);
  const double shift = std::isinf(sigma_sq) ? 0.0 : 1.0 / sigma_sq;
  EmbeddingMatrix emb;
  emb.coords = pairs.vectors;
  for (int i = 0; i < r; ++i) emb.coords.col(i) /= std::sqrt(pairs.values[i] + shift);
  emb.kind = EmbeddingKind::Eigensubspace;
  emb.scaled = true;
  return emb;
}

double embedding_distance(const EmbeddingMatrix& emb, NodeId s, NodeId t) {
  return row_distance(emb.coords, s, t);
}

double edge_sensitivity(const EmbeddingMatrix& emb, const Eigen::MatrixXd& X,
                        NodeId s, NodeId t) {
  if (X.rows() != emb.coords.rows()) {
    throw Error(ErrorKind::Dimension, kModule, "edge_sensitivity",
                "embedding and data have different node counts");
  }
  check_pair(X.rows(), s, t, "edge_sensitivity");
  const double M = static_cast<double>(X.cols());
  return row_distance(emb.coords, s, t) - row_distance(X, s, t) / M;
}

double edge_distortion(const EmbeddingMatrix& emb, const Eigen::MatrixXd& X,
                       NodeId s, NodeId t, Eigen::Index M) {
  if (X.rows() != emb.coords.rows()) {
    throw Error(ErrorKind::Dimension, kModule, "edge_distortion",
                "embedding and data have different node counts");
  }
  check_pair(X.rows(), s, t, "edge_distortion");
  const double z_data = row_distance(X, s, t);
  if (z_data == 0.0) {
    throw Error(ErrorKind::DegeneratePair, kModule, "edge_distortion",
                "nodes " + std::to_string(s) + " and " + std::to_string(t) +
                    " have identical measurements");
  }
  return static_cast<double>(M) * row_distance(emb.coords, s, t) / z_data;
}

ScaledGraph spectral_scale(const WeightedGraph& g_learned, const MeasurementSet& ms,
                           const SolverConfig& solver) {
  if (!ms.has_currents() || ms.node_count() != g_learned.node_count()) {
    throw Error(ErrorKind::Dimension, kModule, "spectral_scale",
                "need voltages and currents over the learned graph's nodes");
  }
  const LaplacianSolver laplace(build_laplacian(g_learned), solver);
  const Eigen::Index M = ms.measurement_count();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    const Eigen::VectorXd y = ms.Y.col(i);
    const double measured = y.dot(ms.X.col(i));
    if (!(measured > 0.0)) {
      throw Error(ErrorKind::InvalidMeasurement, kModule, "spectral_scale",
                  "measurement " + std::to_string(i) +
                      " has nonpositive dissipation y^T x = " + std::to_string(measured));
    }
    sum += y.dot(laplace.solve(y)) / measured;
  }
  const double alpha = sum / static_cast<double>(M);
  return {g_learned.scaled(alpha), alpha};
}

SglResult sgl_learn(const MeasurementSet& ms, const CandidatePool& pool,
                    const SglConfig& cfg) {
  if (!(cfg.tol > 0.0) || !(cfg.weight_scale.value_or(1.0) > 0.0) || !(cfg.beta > 0.0 && cfg.beta <= 1.0) || cfg.r < 1 ||
      cfg.max_iterations < 0) {
    throw Error(ErrorKind::InvalidArgument, kModule, "sgl_learn",
                "need tol > 0, 0 < beta <= 1, r >= 1, max_iterations >= 0");
  }
  const WeightedGraph& knn = pool.knn_graph;
  const NodeId n = knn.node_count();
  if (ms.node_count() != n) {
    throw Error(ErrorKind::Dimension, kModule, "sgl_learn",
                "measurements cover " + std::to_string(ms.node_count()) +
                    " nodes but the candidate pool has " + std::to_string(n));
  }
  const double M = static_cast<double>(ms.measurement_count());
  const double weight_scale = cfg.weight_scale.value_or(M);
  const int r = std::min<int>(cfg.r, static_cast<int>(n - 1));
  const auto batch = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * cfg.beta));

  std::vector<Edge> edges;
  edges.reserve(pool.tree_edges.size() + pool.offtree_edges.size());
  for (auto id : pool.tree_edges) {
    Edge e = knn.edge(id);
    e.w *= weight_scale;
    edges.push_back(e);
  }
  std::vector<Candidate> remaining;
  remaining.reserve(pool.offtree_edges.size());
  for (auto id : pool.offtree_edges) {
    const Edge& e = knn.edge(id);
    remaining.push_back({e.s, e.t, row_distance(ms.X, e.s, e.t)});
  }

  WeightedGraph current(n, edges);
  LearnReport report;
  while (true) {
    if (remaining.empty()) {
      report.converged = true;
      break;
    }
    if (report.iterations >= cfg.max_iterations) break;
    EmbeddingMatrix emb;
    try {
      emb = eigen_embedding(current, r, cfg.sigma_sq, cfg.eig);
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, "sgl_learn",
                  "iteration " + std::to_string(report.iterations) + ": " + e.what());
    }
    double s_max = -std::numeric_limits<double>::infinity();
    for (auto& c : remaining) {
      c.score = row_distance(emb.coords, c.s, c.t) - c.z_data / M;
      s_max = std::max(s_max, c.score);
    }
    report.s_max_trace.push_back(s_max);
    ++report.iterations;
    if (s_max < cfg.tol) {
      report.converged = true;
      break;
    }
    // Highest sensitivity first; ties by (s, t). Candidates stay in (s, t)
    // order, so a stable sort on score alone applies the tie rule.
    std::stable_sort(remaining.begin(), remaining.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    std::size_t take = 0;
    while (take < remaining.size() && take < batch && remaining[take].score > cfg.tol) ++take;
    if (take == 0) {
      report.converged = true;
      break;
    }
    for (std::size_t i = 0; i < take; ++i) {
      const Candidate& c = remaining[i];
      if (c.z_data == 0.0) {
        throw Error(ErrorKind::DegeneratePair, kModule, "sgl_learn",
                    "candidate (" + std::to_string(c.s) + ", " + std::to_string(c.t) +
                        ") has zero data distance");
      }
      edges.push_back({c.s, c.t, weight_scale / c.z_data});
    }
    report.edges_added += take;
    remaining.erase(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(remaining.begin(), remaining.end(), [](const Candidate& a, const Candidate& b) {
      return std::pair(a.s, a.t) < std::pair(b.s, b.t);
    });
    current = WeightedGraph(n, edges);
  }

  SglResult out{std::move(current), std::move(report)};
  if (ms.has_currents()) {
    auto scaled = spectral_scale(out.graph, ms, cfg.solver);
    out.graph = std::move(scaled.graph);
    out.report.alpha_prime = scaled.alpha_prime;
  }
  return out;
}

}  // namespace resnet
