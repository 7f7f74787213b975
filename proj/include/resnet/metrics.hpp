#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "resnet/graph.hpp"
#include "resnet/kernels.hpp"

namespace resnet {

struct MetricsConfig {
  int eig_count = 50;
  int pair_count = 100;
  std::uint64_t seed = 1;
  EigenConfig eig{};
};

struct MetricsReport {
  double err_lambda = 0.0;
  double err_resistance = 0.0;
  double density_original = 0.0;
  double density_learned = 0.0;
  // Objective values on the voltages, when provided.
  std::optional<double> objective_original;
  std::optional<double> objective_learned;
  int eig_count = 0;
  int pair_count = 0;
  Eigen::VectorXd lambda_original;  // first eig_count nonzero eigenvalues
  Eigen::VectorXd lambda_learned;
};

/// (1/k) sum |a~ - a| / a over paired quantities.
double mean_relative_error(const Eigen::VectorXd& approx, const Eigen::VectorXd& exact);

/// Err(lambda) over the first eig_count nonzero eigenvalues and Err(R) over
/// pair_count distinct node pairs drawn uniformly with the seed.
MetricsReport compute_metrics(const WeightedGraph& g_true, const WeightedGraph& g_learned,
                              const MetricsConfig& cfg = {},
                              const Eigen::MatrixXd* voltages = nullptr);

}  // namespace resnet
