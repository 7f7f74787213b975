#include "resnet/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "resnet/error.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "cli-io";

[[noreturn]] void io_error(const char* op, const std::string& message) {
  throw Error(ErrorKind::Io, kModule, op, message);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// strtod over a whole token; accepts decimal and hex floats.
bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size() && errno != ERANGE;
}

bool parse_index(const std::string& token, long long& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(token.c_str(), &end, 10);
  return end == token.c_str() + token.size() && errno != ERANGE;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_in(const std::string& path, const char* op) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(op, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path, const char* op) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(op, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string hex_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

void write_graph(std::ostream& out, const WeightedGraph& g) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << "% weighted graph: row > col, weight, weight as hex float\n";
  out << g.node_count() << ' ' << g.node_count() << ' ' << g.edge_count() << '\n';
  char buf[64];
  for (const auto& e : g.edges()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.w);
    out << e.t + 1 << ' ' << e.s + 1 << ' ' << buf << ' ' << hex_double(e.w) << '\n';
  }
}

WeightedGraph read_graph(std::istream& in, const std::string& name) {
  const char* op = "read_graph";
  std::string line;
  long long line_no = 0;
  auto where = [&] { return name + ":" + std::to_string(line_no) + ": "; };
  if (!std::getline(in, line)) io_error(op, name + ": empty file");
  ++line_no;
  std::istringstream head(lower(trim_cr(line)));
  std::string banner, object, format, field, symmetry;
  head >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix" || format != "coordinate") {
    io_error(op, where() + "expected a Matrix Market coordinate header");
  }
  if (field != "real" && field != "integer" && field != "pattern") {
    io_error(op, where() + "unsupported field '" + field + "'");
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    io_error(op, where() + "unsupported symmetry '" + symmetry + "'");
  }
  const bool pattern = field == "pattern";

  long long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty() || line[0] == '%') continue;
    std::istringstream size(line);
    if (!(size >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      io_error(op, where() + "bad size line");
    }
    break;
  }
  if (rows < 0) io_error(op, name + ": missing size line");
  if (rows != cols) {
    io_error(op, where() + "matrix is " + std::to_string(rows) + " x " + std::to_string(cols) +
                     ", need a square matrix");
  }
  std::map<std::pair<NodeId, NodeId>, double> weights;
  long long seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    std::vector<std::string> tok;
    for (std::string t; entry >> t;) tok.push_back(t);
    long long i = 0, j = 0;
    if (tok.size() < (pattern ? 2u : 3u) || !parse_index(tok[0], i) || !parse_index(tok[1], j)) {
      io_error(op, where() + "malformed entry");
    }
    if (i < 1 || j < 1 || i > rows || j > rows) {
      io_error(op, where() + "index out of range");
    }
    double w = 1.0;
    if (!pattern) {
      // Prefer the exact hex column when present.
      const std::string& text = tok.size() >= 4 ? tok[3] : tok[2];
      if (!parse_double(text, w) || !std::isfinite(w)) {
        io_error(op, where() + "bad value '" + text + "'");
      }
    }
    ++seen;
    if (i == j || w == 0.0) continue;
    const NodeId s = std::min(i, j) - 1, t = std::max(i, j) - 1;
    const double weight = std::abs(w);
    auto [it, fresh] = weights.try_emplace({s, t}, weight);
    if (!fresh && it->second != weight) {
      io_error(op, where() + "entries (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") and its transpose disagree");
    }
  }
  if (seen != nnz) {
    io_error(op, name + ": header promises " + std::to_string(nnz) + " entries, found " +
                     std::to_string(seen));
  }
  std::vector<Edge> edges;
  edges.reserve(weights.size());
  for (const auto& [key, w] : weights) edges.push_back({key.first, key.second, w});
  return WeightedGraph(static_cast<NodeId>(rows), std::move(edges));
}

void write_graph_file(const std::string& path, const WeightedGraph& g) {
  auto out = open_out(path, "write_graph");
  write_graph(out, g);
  if (!out) io_error("write_graph", "failed writing '" + path + "'");
}

WeightedGraph read_graph_file(const std::string& path) {
  auto in = open_in(path, "read_graph");
  return read_graph(in, path);
}

void write_measurements(std::ostream& out, const MeasurementSet& ms) {
  const Eigen::Index n = ms.node_count(), m = ms.measurement_count();
  const bool currents = ms.has_currents();
  out << "# source=" << to_string(ms.source) << " noise=" << hex_double(ms.noise_level) << '\n';
  out << "node";
  for (Eigen::Index j = 0; j < m; ++j) out << ",x" << j;
  if (currents)
    for (Eigen::Index j = 0; j < m; ++j) out << ",y" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    out << i;
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << hex_double(ms.X(i, j));
    if (currents)
      for (Eigen::Index j = 0; j < m; ++j) out << ',' << hex_double(ms.Y(i, j));
    out << '\n';
  }
}

MeasurementSet read_measurements(std::istream& in, const std::string& name) {
  const char* op = "read_measurements";
  MeasurementSet ms;
  std::string line;
  long long line_no = 0;
  auto where = [&] { return name + ":" + std::to_string(line_no) + ": "; };
  if (!std::getline(in, line)) io_error(op, name + ": empty file");
  ++line_no;
  line = trim_cr(line);
  if (line.rfind("# ", 0) == 0) {
    std::istringstream meta(line.substr(2));
    for (std::string kv; meta >> kv;) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      try {
        if (key == "source") ms.source = parse_measurement_source(value);
      } catch (const Error&) {
        io_error(op, where() + "unknown source '" + value + "'");
      }
      if (key == "noise" && !parse_double(value, ms.noise_level)) {
        io_error(op, where() + "bad noise level '" + value + "'");
      }
    }
    if (!std::getline(in, line)) io_error(op, name + ": missing header");
    ++line_no;
    line = trim_cr(line);
  }
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "node") io_error(op, where() + "header must start with 'node'");
  Eigen::Index mx = 0, my = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (!h.empty() && h[0] == 'x' && my == 0) {
      ++mx;
    } else if (!h.empty() && h[0] == 'y') {
      ++my;
    } else {
      io_error(op, where() + "unexpected column '" + h + "'");
    }
  }
  if (mx == 0 || (my != 0 && my != mx)) {
    io_error(op, where() + "need M voltage columns and zero or M current columns");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    long long node = 0;
    if (static_cast<Eigen::Index>(cells.size()) != 1 + mx + my || !parse_index(cells[0], node) ||
        node != static_cast<long long>(rows.size())) {
      io_error(op, where() + "expected node " + std::to_string(rows.size()) + " with " +
                       std::to_string(mx + my) + " values");
    }
    std::vector<double> values(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c - 1]) || !std::isfinite(values[c - 1])) {
        io_error(op, where() + "bad value '" + cells[c] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  ms.X.resize(n, mx);
  ms.Y.resize(my ? n : 0, mx);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < mx; ++j) ms.X(i, j) = rows[i][j];
    for (Eigen::Index j = 0; j < my; ++j) ms.Y(i, j) = rows[i][mx + j];
  }
  return ms;
}

void write_measurements_file(const std::string& path, const MeasurementSet& ms) {
  auto out = open_out(path, "write_measurements");
  write_measurements(out, ms);
  if (!out) io_error("write_measurements", "failed writing '" + path + "'");
}

MeasurementSet read_measurements_file(const std::string& path) {
  auto in = open_in(path, "read_measurements");
  return read_measurements(in, path);
}

VerificationProblem read_problem_file(const std::string& path) {
  const char* op = "read_problem";
  auto in = open_in(path, op);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    io_error(op, path + ": " + e.what());
  }
  try {
    if (!doc.contains("graph")) io_error(op, path + ": missing \"graph\"");
    std::filesystem::path graph_path = doc.at("graph").get<std::string>();
    if (graph_path.is_relative()) graph_path = std::filesystem::path(path).parent_path() / graph_path;
    const WeightedGraph g = read_graph_file(graph_path.string());
    if (doc.contains("synthetic")) {
      const auto& s = doc.at("synthetic");
      SyntheticProtocol p;
      p.source_fraction = s.value("source_fraction", p.source_fraction);
      p.global_fraction = s.value("global_fraction", p.global_fraction);
      p.regions = s.value("regions", p.regions);
      p.regional_fraction = s.value("regional_fraction", p.regional_fraction);
      p.ground_fraction = s.value("ground_fraction", p.ground_fraction);
      p.query_count = s.value("query_count", p.query_count);
      return synthetic_problem(g, s.value("seed", std::uint64_t{1}), p);
    }
    VerificationProblem pb;
    pb.grid = g;
    pb.ground_nodes = doc.at("ground").get<std::vector<NodeId>>();
    pb.query_nodes = doc.at("queries").get<std::vector<NodeId>>();
    auto& c = pb.constraints;
    c.upper_bounds = Eigen::VectorXd::Zero(g.node_count());
    const auto& ub = doc.at("upper_bounds");
    if (ub.is_array()) {
      const auto v = ub.get<std::vector<double>>();
      if (static_cast<NodeId>(v.size()) != g.node_count()) {
        io_error(op, path + ": upper_bounds has " + std::to_string(v.size()) + " entries for " +
                         std::to_string(g.node_count()) + " nodes");
      }
      c.upper_bounds = Eigen::Map<const Eigen::VectorXd>(v.data(), g.node_count());
    } else {
      for (const auto& [key, value] : ub.items()) {
        long long node = 0;
        if (!parse_index(key, node) || node < 0 || node >= g.node_count()) {
          io_error(op, path + ": bad node '" + key + "' in upper_bounds");
        }
        c.upper_bounds[node] = value.get<double>();
      }
    }
    if (doc.contains("budgets")) {
      for (const auto& b : doc.at("budgets")) {
        c.budgets.push_back({b.at("nodes").get<std::vector<NodeId>>(), b.at("bound").get<double>()});
      }
    }
    return pb;
  } catch (const nlohmann::json::exception& e) {
    io_error(op, path + ": " + e.what());
  }
}

}  // namespace resnet
