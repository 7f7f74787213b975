#pragma once

#include <string>
#include <vector>

#include "resnet/graph.hpp"

namespace resnet {

enum class MeshKind { Grid2d, Grid3d, Cycle, Tree };

const char* to_string(MeshKind kind);
MeshKind parse_mesh_kind(const std::string& name);

/// Unit-weight structured graphs with row-major numbering. dims holds two
/// extents for grid2d, three for grid3d and a node count for cycle and tree
/// (a complete binary tree where node i hangs below (i - 1) / 2).
WeightedGraph gen_mesh(MeshKind kind, const std::vector<NodeId>& dims);

/// Parses "64x64" or "10x10x10".
std::vector<NodeId> parse_dims(const std::string& text);

}  // namespace resnet
