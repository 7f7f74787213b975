#pragma once

#include <stdexcept>
#include <string>

namespace resnet {

enum class ErrorKind {
  MalformedGraph,
  Dimension,
  Connectivity,
  InfiniteResistance,
  SolverDivergence,
  InconsistentRhs,
  EigensolverFailure,
  WeightOverflow,
  TooFewNodes,
  InvalidMeasurement,
  DegeneratePair,
  CoarseningStall,
  HierarchyInconsistency,
  FloatingIsland,
  UnsupportedConstraints,
  InvalidArgument,
  Io,
};

const char* to_string(ErrorKind kind);

// Every failure carries the module and operation that raised it so the CLI
// can report "module/operation: message" without extra bookkeeping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation,
        const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
  std::string detail_;
};

// Solver failure with the last relative residual attached.
class SolverError : public Error {
 public:
  SolverError(std::string operation, const std::string& message,
              double residual);
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace resnet
