#include "resnet/measurements.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <string>

#include "resnet/error.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "measurement-gen";

std::mt19937_64 column_rng(std::uint64_t seed, std::uint64_t column) {
  std::seed_seq seq{seed, column};
  return std::mt19937_64(seq);
}

void require_connected(const WeightedGraph& g, const char* op) {
  if (g.node_count() < 2 || !is_connected(g)) {
    throw Error(ErrorKind::Connectivity, kModule, op,
                "ground-truth graph must be connected with N >= 2");
  }
}

// FNV-1a over the raw bytes of a column.
std::uint64_t column_hash(const Eigen::VectorXd& x) {
  std::uint64_t h = 1469598103934665603ull;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x[i], sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

const char* to_string(MeasurementSource source) {
  switch (source) {
    case MeasurementSource::Gaussian: return "gaussian";
    case MeasurementSource::JohnsonLindenstrauss: return "jl";
    case MeasurementSource::External: return "external";
  }
  return "external";
}

MeasurementSource parse_measurement_source(const std::string& name) {
  if (name == "gaussian") return MeasurementSource::Gaussian;
  if (name == "jl") return MeasurementSource::JohnsonLindenstrauss;
  if (name == "external") return MeasurementSource::External;
  throw Error(ErrorKind::InvalidArgument, kModule, "parse_source",
              "unknown measurement source '" + name + "'");
}

int jl_measurement_count(Eigen::Index node_count, const JlConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "generate_jl",
                "epsilon must lie in (0, 1)");
  }
  if (cfg.m_override) {
    if (*cfg.m_override < 1) {
      throw Error(ErrorKind::InvalidArgument, kModule, "generate_jl",
                  "measurement count override must be positive");
    }
    return *cfg.m_override;
  }
  const double n = static_cast<double>(node_count);
  double log_n = std::log(n);
  if (cfg.log_base == LogBase::Two) log_n = std::log2(n);
  if (cfg.log_base == LogBase::Ten) log_n = std::log10(n);
  return std::max(1, static_cast<int>(std::ceil(24.0 * log_n / (cfg.epsilon * cfg.epsilon))));
}

MeasurementSet generate_gaussian(const WeightedGraph& g_true, int M,
                                 std::uint64_t seed, const SolverConfig& solver) {
  if (M < 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "generate_gaussian",
                "need at least one measurement");
  }
  require_connected(g_true, "generate_gaussian");
  const NodeId n = g_true.node_count();
  MeasurementSet ms;
  ms.source = MeasurementSource::Gaussian;
  ms.Y.resize(n, M);
  for (int i = 0; i < M; ++i) {
    auto rng = column_rng(seed, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    auto y = ms.Y.col(i);
    for (NodeId v = 0; v < n; ++v) y[v] = normal(rng);
    remove_mean(y);
    y /= y.norm();
  }
  const LaplacianSolver laplace(build_laplacian(g_true), solver);
  ms.X = laplace.solve(ms.Y);
  return ms;
}

MeasurementSet generate_jl(const WeightedGraph& g_true, const JlConfig& cfg,
                           std::uint64_t seed, const SolverConfig& solver) {
  require_connected(g_true, "generate_jl");
  const int M = jl_measurement_count(g_true.node_count(), cfg);
  const NodeId n = g_true.node_count();
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  MeasurementSet ms;
  ms.source = MeasurementSource::JohnsonLindenstrauss;
  ms.Y = Eigen::MatrixXd::Zero(n, M);
  for (int i = 0; i < M; ++i) {
    auto rng = column_rng(seed, static_cast<std::uint64_t>(i));
    std::bernoulli_distribution coin(0.5);
    auto y = ms.Y.col(i);
    for (const auto& e : g_true.edges()) {
      const double c = (coin(rng) ? scale : -scale) * std::sqrt(e.w);
      y[e.s] += c;
      y[e.t] -= c;
    }
  }
  const LaplacianSolver laplace(build_laplacian(g_true), solver);
  ms.X = laplace.solve(ms.Y);
  return ms;
}

MeasurementSet add_noise(const MeasurementSet& ms, double zeta, std::uint64_t seed) {
  if (!(zeta >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "add_noise",
                "noise level must be nonnegative");
  }
  MeasurementSet out = ms;
  out.noise_level = zeta;
  if (zeta == 0.0) return out;
  for (Eigen::Index i = 0; i < out.X.cols(); ++i) {
    const Eigen::VectorXd x = ms.X.col(i);
    auto rng = column_rng(seed, column_hash(x));
    std::normal_distribution<double> normal;
    Eigen::VectorXd eps(x.size());
    for (Eigen::Index v = 0; v < x.size(); ++v) eps[v] = normal(rng);
    eps.normalize();
    out.X.col(i) = x + zeta * x.norm() * eps;
  }
  return out;
}

SubsampledMeasurements subsample_nodes(const MeasurementSet& ms, double fraction,
                                       std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "subsample_nodes",
                "fraction must lie in (0, 1]");
  }
  const NodeId n = ms.node_count();
  const auto keep = static_cast<NodeId>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (keep < 3) {
    throw Error(ErrorKind::TooFewNodes, kModule, "subsample_nodes",
                "only " + std::to_string(keep) + " nodes would remain");
  }
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  SubsampledMeasurements out;
  out.retained.reserve(keep);
  std::mt19937_64 rng(seed);
  // Selection sampling keeps the input order, so ids come out increasing.
  std::sample(all.begin(), all.end(), std::back_inserter(out.retained), keep, rng);
  out.measurements.X.resize(keep, ms.X.cols());
  for (NodeId i = 0; i < keep; ++i) out.measurements.X.row(i) = ms.X.row(out.retained[i]);
  out.measurements.Y.resize(0, ms.X.cols());
  out.measurements.noise_level = ms.noise_level;
  out.measurements.source = ms.source;
  return out;
}

}  // namespace resnet
