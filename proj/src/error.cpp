#include "resnet/error.hpp"

#include <utility>

namespace resnet {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedGraph: return "malformed-graph";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Connectivity: return "connectivity";
    case ErrorKind::InfiniteResistance: return "infinite-resistance";
    case ErrorKind::SolverDivergence: return "solver-divergence";
    case ErrorKind::InconsistentRhs: return "inconsistent-rhs";
    case ErrorKind::EigensolverFailure: return "eigensolver-failure";
    case ErrorKind::WeightOverflow: return "weight-overflow";
    case ErrorKind::TooFewNodes: return "too-few-nodes";
    case ErrorKind::InvalidMeasurement: return "invalid-measurement";
    case ErrorKind::DegeneratePair: return "degenerate-pair";
    case ErrorKind::CoarseningStall: return "coarsening-stall";
    case ErrorKind::HierarchyInconsistency: return "hierarchy-inconsistency";
    case ErrorKind::FloatingIsland: return "floating-island";
    case ErrorKind::UnsupportedConstraints: return "unsupported-constraints";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string module, std::string operation,
             const std::string& message)
    : std::runtime_error(module + "/" + operation + ": " + to_string(kind) +
                         ": " + message),
      kind_(kind),
      module_(std::move(module)),
      operation_(std::move(operation)),
      detail_(message) {}

SolverError::SolverError(std::string operation, const std::string& message,
                         double residual)
    : Error(ErrorKind::SolverDivergence, "spectral-kernels",
            std::move(operation), message),
      residual_(residual) {}

}  // namespace resnet
