#include "resnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "resnet/error.hpp"

namespace resnet {

namespace {
constexpr const char* kModule = "cli-io";
}

double mean_relative_error(const Eigen::VectorXd& approx, const Eigen::VectorXd& exact) {
  if (approx.size() != exact.size() || exact.size() == 0) {
    throw Error(ErrorKind::Dimension, kModule, "mean_relative_error",
                "need equal nonempty vectors");
  }
  return ((approx - exact).array().abs() / exact.array().abs()).mean();
}

MetricsReport compute_metrics(const WeightedGraph& g_true, const WeightedGraph& g_learned,
                              const MetricsConfig& cfg, const Eigen::MatrixXd* voltages) {
  const NodeId n = g_true.node_count();
  if (g_learned.node_count() != n) {
    throw Error(ErrorKind::Dimension, kModule, "compute_metrics",
                "true graph has " + std::to_string(n) + " nodes, learned graph has " +
                    std::to_string(g_learned.node_count()));
  }
  if (cfg.eig_count < 1 || cfg.pair_count < 1 || n < 2) {
    throw Error(ErrorKind::InvalidArgument, kModule, "compute_metrics",
                "need eig_count >= 1, pair_count >= 1 and two nodes");
  }
  MetricsReport rep;
  rep.eig_count = static_cast<int>(std::min<NodeId>(cfg.eig_count, n - 1));
  EigenConfig eig = cfg.eig;
  eig.r = rep.eig_count;
  rep.lambda_original = eigen_pairs(build_laplacian(g_true), eig).values;
  rep.lambda_learned = eigen_pairs(build_laplacian(g_learned), eig).values;
  rep.err_lambda = mean_relative_error(rep.lambda_learned, rep.lambda_original);

  // Distinct unordered pairs while enough exist.
  const double all_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  rep.pair_count = static_cast<int>(std::min<double>(cfg.pair_count, all_pairs));
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  std::set<std::pair<NodeId, NodeId>> pairs;
  std::vector<std::pair<NodeId, NodeId>> order;
  while (static_cast<int>(order.size()) < rep.pair_count) {
    NodeId s = pick(rng), t = pick(rng);
    if (s == t) continue;
    if (s > t) std::swap(s, t);
    if (pairs.insert({s, t}).second) order.push_back({s, t});
  }
  const ResistanceCalculator rt(g_true), rl(g_learned);
  Eigen::VectorXd a(rep.pair_count), b(rep.pair_count);
  for (int i = 0; i < rep.pair_count; ++i) {
    a[i] = rl.resistance(order[i].first, order[i].second);
    b[i] = rt.resistance(order[i].first, order[i].second);
  }
  rep.err_resistance = mean_relative_error(a, b);
  rep.density_original = density(g_true);
  rep.density_learned = density(g_learned);
  if (voltages) {
    rep.objective_original = objective_value(g_true, *voltages);
    rep.objective_learned = objective_value(g_learned, *voltages);
  }
  return rep;
}

}  // namespace resnet
