#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "resnet/graph.hpp"
#include "resnet/measurements.hpp"
#include "resnet/verify.hpp"

namespace resnet {

/// Graph as a symmetric Matrix Market coordinate file holding the lower
/// triangle of the weight matrix. A fourth column repeats each weight as a
/// hexadecimal float so reading back is exact; readers without it use the
/// decimal value. Off-diagonal entries of a Laplacian (negative values) are
/// accepted as weights of their magnitude; diagonal entries are ignored.
void write_graph(std::ostream& out, const WeightedGraph& g);
WeightedGraph read_graph(std::istream& in, const std::string& name = "<stream>");
void write_graph_file(const std::string& path, const WeightedGraph& g);
WeightedGraph read_graph_file(const std::string& path);

/// Measurements as CSV: a comment line with the source and noise level, a
/// header, then one row per node with the M voltages followed by the M
/// currents (no current columns for voltage-only sets). Values are hex
/// floats.
void write_measurements(std::ostream& out, const MeasurementSet& ms);
MeasurementSet read_measurements(std::istream& in, const std::string& name = "<stream>");
void write_measurements_file(const std::string& path, const MeasurementSet& ms);
MeasurementSet read_measurements_file(const std::string& path);

/// Shortest hex-float text of x, e.g. 0x1.8p+1.
std::string hex_double(double x);

/// Verification problem as JSON:
///   {"graph": "grid.mtx", "ground": [..], "queries": [..],
///    "upper_bounds": {"node": bound, ...} or [b0, b1, ...],
///    "budgets": [{"nodes": [..], "bound": B}, ...]}
/// or {"graph": ..., "synthetic": {"seed": S, ...}} for the generated
/// protocol. Relative graph paths resolve against the problem file.
VerificationProblem read_problem_file(const std::string& path);

}  // namespace resnet
