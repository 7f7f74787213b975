#include "resnet/mesh.hpp"

#include <cstdint>
#include <limits>
#include <sstream>

#include "resnet/error.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "cli-io";

NodeId checked_product(const std::vector<NodeId>& dims) {
  NodeId n = 1;
  for (auto d : dims) {
    if (d <= 0) {
      throw Error(ErrorKind::InvalidArgument, kModule, "gen_mesh", "dimensions must be positive");
    }
    if (n > std::numeric_limits<std::int32_t>::max() / d) {
      throw Error(ErrorKind::InvalidArgument, kModule, "gen_mesh", "mesh dimensions overflow");
    }
    n *= d;
  }
  return n;
}

}  // namespace

const char* to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::Grid2d: return "grid2d";
    case MeshKind::Grid3d: return "grid3d";
    case MeshKind::Cycle: return "cycle";
    case MeshKind::Tree: return "tree";
  }
  return "?";
}

MeshKind parse_mesh_kind(const std::string& name) {
  for (auto k : {MeshKind::Grid2d, MeshKind::Grid3d, MeshKind::Cycle, MeshKind::Tree}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidArgument, kModule, "gen_mesh", "unknown mesh kind '" + name + "'");
}

std::vector<NodeId> parse_dims(const std::string& text) {
  std::vector<NodeId> dims;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, 'x')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || v <= 0) {
      throw Error(ErrorKind::InvalidArgument, kModule, "parse_dims",
                  "bad dimensions '" + text + "'");
    }
    dims.push_back(static_cast<NodeId>(v));
  }
  if (dims.empty()) {
    throw Error(ErrorKind::InvalidArgument, kModule, "parse_dims", "empty dimensions");
  }
  return dims;
}

WeightedGraph gen_mesh(MeshKind kind, const std::vector<NodeId>& dims) {
  const std::size_t want = kind == MeshKind::Grid2d ? 2 : kind == MeshKind::Grid3d ? 3 : 1;
  if (dims.size() != want) {
    throw Error(ErrorKind::InvalidArgument, kModule, "gen_mesh",
                std::string(to_string(kind)) + " takes " + std::to_string(want) +
                    " dimension(s), got " + std::to_string(dims.size()));
  }
  const NodeId n = checked_product(dims);
  std::vector<Edge> edges;
  switch (kind) {
    case MeshKind::Grid2d: {
      const NodeId a = dims[0], b = dims[1];
      for (NodeId i = 0; i < a; ++i)
        for (NodeId j = 0; j < b; ++j) {
          const NodeId v = i * b + j;
          if (j + 1 < b) edges.push_back({v, v + 1, 1.0});
          if (i + 1 < a) edges.push_back({v, v + b, 1.0});
        }
      break;
    }
    case MeshKind::Grid3d: {
      const NodeId a = dims[0], b = dims[1], c = dims[2];
      for (NodeId i = 0; i < a; ++i)
        for (NodeId j = 0; j < b; ++j)
          for (NodeId k = 0; k < c; ++k) {
            const NodeId v = (i * b + j) * c + k;
            if (k + 1 < c) edges.push_back({v, v + 1, 1.0});
            if (j + 1 < b) edges.push_back({v, v + c, 1.0});
            if (i + 1 < a) edges.push_back({v, v + b * c, 1.0});
          }
      break;
    }
    case MeshKind::Cycle:
      if (n < 3) {
        throw Error(ErrorKind::InvalidArgument, kModule, "gen_mesh", "cycle needs 3 nodes");
      }
      for (NodeId i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
      break;
    case MeshKind::Tree:
      for (NodeId i = 1; i < n; ++i) edges.push_back({(i - 1) / 2, i, 1.0});
      break;
  }
  return WeightedGraph(n, std::move(edges));
}

}  // namespace resnet
