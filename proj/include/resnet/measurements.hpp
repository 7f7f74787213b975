#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "resnet/graph.hpp"
#include "resnet/kernels.hpp"

namespace resnet {

enum class MeasurementSource { Gaussian, JohnsonLindenstrauss, External };

const char* to_string(MeasurementSource source);
MeasurementSource parse_measurement_source(const std::string& name);

/// Paired voltage (X) and current (Y) responses, one column per experiment.
/// A voltage-only set (after node subsampling) keeps Y with zero rows.
struct MeasurementSet {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  double noise_level = 0.0;
  MeasurementSource source = MeasurementSource::External;

  Eigen::Index node_count() const { return X.rows(); }
  Eigen::Index measurement_count() const { return X.cols(); }
  bool has_currents() const { return Y.rows() == X.rows() && Y.cols() == X.cols(); }
};

enum class LogBase { Natural, Two, Ten };

struct JlConfig {
  double epsilon = 0.5;
  std::optional<int> m_override;
  LogBase log_base = LogBase::Natural;
};

/// ceil(24 log N / eps^2)
int jl_measurement_count(Eigen::Index node_count, const JlConfig& cfg);

/// Standard-normal currents, each column centered and unit-normalized, with
/// X(:, i) = L^+ Y(:, i). Column i draws from a generator seeded by
/// (seed, i) so results do not depend on evaluation order.
MeasurementSet generate_gaussian(const WeightedGraph& g_true, int M,
                                 std::uint64_t seed,
                                 const SolverConfig& solver = {});

/// Y^T = C W^{1/2} B with C a random +-1/sqrt(M) matrix of size M x |E| and
/// B the signed incidence matrix (head = smaller endpoint).
MeasurementSet generate_jl(const WeightedGraph& g_true, const JlConfig& cfg,
                           std::uint64_t seed, const SolverConfig& solver = {});

/// x <- x + zeta ||x|| eps with eps a unit-norm Gaussian direction. The noise
/// for a column is seeded from the seed and the column's contents, so the
/// operation commutes with column permutations.
MeasurementSet add_noise(const MeasurementSet& ms, double zeta, std::uint64_t seed);

struct SubsampledMeasurements {
  MeasurementSet measurements;
  std::vector<NodeId> retained;  // strictly increasing original node ids
};

/// Keeps ceil(fraction * N) uniformly sampled voltage rows; currents are
/// dropped.
SubsampledMeasurements subsample_nodes(const MeasurementSet& ms, double fraction,
                                       std::uint64_t seed);

}  // namespace resnet
