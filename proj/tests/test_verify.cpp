#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "resnet/error.hpp"
#include "resnet/verify.hpp"
#include "lp_oracle.hpp"
#include "support.hpp"

using namespace resnet;
using namespace resnet::testing;

namespace {

struct Instance {
  Eigen::VectorXd z;
  CurrentConstraints c;
  std::vector<NodeId> sources;
};

Instance random_instance(std::uint64_t seed, NodeId n, int source_count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Instance in;
  in.z = Eigen::VectorXd(n);
  for (NodeId p = 0; p < n; ++p) in.z[p] = unit(rng);
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::sample(all.begin(), all.end(), std::back_inserter(in.sources), source_count, rng);
  in.c.upper_bounds = Eigen::VectorXd::Zero(n);
  for (auto s : in.sources) in.c.upper_bounds[s] = 0.2 + unit(rng);
  in.c.budgets = random_laminar(in.sources, rng, in.c.upper_bounds);
  return in;
}

Eigen::MatrixXd grounded_dense(const WeightedGraph& g, const std::vector<NodeId>& ground) {
  const Eigen::MatrixXd L = dense_laplacian(g);
  std::vector<NodeId> keep;
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (std::find(ground.begin(), ground.end(), v) == ground.end()) keep.push_back(v);
  Eigen::MatrixXd G(keep.size(), keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b) G(a, b) = L(keep[a], keep[b]);
  return G;
}

}  // namespace

TEST_CASE("grounded systems by hand") {
  const auto two = ground_system(WeightedGraph(2, {{0, 1, 1.0}}), {1});
  CHECK(Eigen::MatrixXd(two.matrix()) == Eigen::MatrixXd::Ones(1, 1));

  const auto path = ground_system(path_graph(3), {0});
  Eigen::Matrix2d expect;
  expect << 2, -1, -1, 1;
  CHECK(Eigen::MatrixXd(path.matrix()) == expect);
  CHECK(path.free_nodes() == std::vector<NodeId>{1, 2});
  CHECK(path.reduced_index(0) == -1);
}

TEST_CASE("grounded systems are positive definite") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_connected_graph(150, 200, seed, 0.1, 10.0);
    const std::vector<NodeId> ground{static_cast<NodeId>(seed * 7 % 150)};
    const auto sys = ground_system(g, ground);
    const Eigen::MatrixXd G(sys.matrix());
    CHECK(G == grounded_dense(g, ground));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] > 0.0);
  }
}

TEST_CASE("floating islands are reported") {
  const WeightedGraph g(5, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}});
  try {
    ground_system(g, {0});
    FAIL("expected a floating island");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FloatingIsland);
    CHECK(std::string(e.what()).find("3, 4") != std::string::npos);
  }
  CHECK_NOTHROW(ground_system(g, {0, 4}));
  CHECK_THROWS_AS(ground_system(g, {}), Error);
  CHECK_THROWS_AS(ground_system(g, {7}), Error);
}

TEST_CASE("adjoint sensitivity is a column of the inverse") {
  const auto one = ground_system(WeightedGraph(2, {{0, 1, 4.0}}), {0});
  CHECK(adjoint_sensitivity(one, 1)[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(adjoint_sensitivity(one, 1)[0] == 0.0);

  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const NodeId n = 100 + static_cast<NodeId>(seed) * 25;
    const auto g = random_connected_graph(n, 2 * n, 50 + seed, 0.1, 10.0);
    const std::vector<NodeId> ground{0, n / 2};
    const auto sys = ground_system(g, ground);
    const Eigen::MatrixXd inv = grounded_dense(g, ground).inverse();
    for (NodeId q : {NodeId{1}, n - 1, n / 3}) {
      const auto z = adjoint_sensitivity(sys, q);
      CHECK(z.minCoeff() >= 0.0);
      const auto col = inv.col(sys.reduced_index(q));
      for (NodeId p = 0; p < n; ++p) {
        if (sys.is_ground(p)) {
          CHECK(z[p] == 0.0);
        } else {
          CHECK(std::abs(z[p] - col[sys.reduced_index(p)]) <= 1e-8 * col.maxCoeff());
        }
      }
    }
  }
  CHECK_THROWS_AS(adjoint_sensitivity(one, 0), Error);
  CHECK_THROWS_AS(adjoint_sensitivity(one, 5), Error);
}

TEST_CASE("conjugate gradient grounding agrees with the factor") {
  const auto g = random_connected_graph(120, 200, 3, 0.5, 2.0);
  SolverConfig cg;
  cg.method = SolverMethod::ConjugateGradient;
  cg.tolerance = 1e-12;
  const auto a = adjoint_sensitivity(ground_system(g, {5}), 40);
  const auto b = adjoint_sensitivity(ground_system(g, {5}, cg), 40);
  CHECK((a - b).norm() <= 1e-9 * a.norm());
}

TEST_CASE("worst case without budgets and with one tight budget") {
  Eigen::VectorXd z(4);
  z << 0.5, 2.0, 1.0, 0.0;
  CurrentConstraints c;
  c.upper_bounds = Eigen::VectorXd::Constant(4, 3.0);
  auto wc = worst_case_voltage(z, c);
  CHECK(wc.value == doctest::Approx(3.0 * 3.5));
  CHECK(wc.witness.head(3) == Eigen::VectorXd::Constant(3, 3.0));

  c.budgets.push_back({{0, 1, 2, 3}, 1.5});
  wc = worst_case_voltage(z, c);
  CHECK(wc.value == doctest::Approx(3.0));
  CHECK(wc.witness[1] == 1.5);
  CHECK(wc.witness.sum() == 1.5);
}

TEST_CASE("greedy matches vertex enumeration on laminar instances") {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const NodeId n = 10 + static_cast<NodeId>(seed % 31);
    const auto in = random_instance(seed, n, 2 + static_cast<int>(seed % 5));
    const auto wc = worst_case_voltage(in.z, in.c);
    CHECK(feasible(wc.witness, in.c));
    CHECK(std::abs(in.z.dot(wc.witness) - wc.value) <= 1e-14 * std::max(1.0, wc.value));
    const double oracle = vertex_enumeration(in.z, in.c, in.sources);
    CHECK(std::abs(wc.value - oracle) <= 1e-10 * std::max(1.0, oracle));
    ++compared;
  }
  CHECK(compared == 60);
}

TEST_CASE("overlapping budgets are rejected") {
  CurrentConstraints c;
  c.upper_bounds = Eigen::VectorXd::Ones(4);
  c.budgets = {{{0, 1}, 1.0}, {{1, 2}, 1.0}};
  try {
    worst_case_voltage(Eigen::VectorXd::Ones(4), c);
    FAIL("expected unsupported constraints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedConstraints);
  }
  c.budgets = {{{0, 1}, 1.0}, {{0, 1, 2}, 1.0}, {{3}, 0.5}};
  CHECK_NOTHROW(worst_case_voltage(Eigen::VectorXd::Ones(4), c));
  c.budgets = {{{0, 0}, 1.0}};
  CHECK_THROWS_AS(worst_case_voltage(Eigen::VectorXd::Ones(4), c), Error);
  c.budgets = {{{0}, 0.0}};
  CHECK_THROWS_AS(worst_case_voltage(Eigen::VectorXd::Ones(4), c), Error);
  c.budgets.clear();
  c.upper_bounds[2] = -1.0;
  CHECK_THROWS_AS(worst_case_voltage(Eigen::VectorXd::Ones(4), c), Error);
  CHECK_THROWS_AS(worst_case_voltage(Eigen::VectorXd::Ones(3), c), Error);
}

TEST_CASE("enlarging bounds never lowers the worst case") {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto in = random_instance(1000 + seed, 30, 8);
    const double before = worst_case_voltage(in.z, in.c).value;
    auto bigger = in.c;
    if (!bigger.budgets.empty() && rng() % 2) {
      bigger.budgets[rng() % bigger.budgets.size()].bound *= 1.5;
    } else {
      bigger.upper_bounds[in.sources[rng() % in.sources.size()]] += 0.7;
    }
    CHECK(worst_case_voltage(in.z, bigger).value >= before);
  }
}

TEST_CASE("unsaturated sources are blocked by a tight budget") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto in = random_instance(2000 + seed, 25, 10);
    const auto wc = worst_case_voltage(in.z, in.c);
    std::vector<bool> tight(in.c.budgets.size());
    for (std::size_t k = 0; k < in.c.budgets.size(); ++k) {
      double s = 0.0;
      for (auto p : in.c.budgets[k].nodes) s += wc.witness[p];
      tight[k] = s >= in.c.budgets[k].bound * (1.0 - 1e-12);
    }
    for (auto p : in.sources) {
      if (in.z[p] <= 0.0 || wc.witness[p] >= in.c.upper_bounds[p] * (1.0 - 1e-12)) continue;
      bool blocked = false;
      for (std::size_t k = 0; k < in.c.budgets.size(); ++k) {
        const auto& nodes = in.c.budgets[k].nodes;
        if (tight[k] && std::find(nodes.begin(), nodes.end(), p) != nodes.end()) blocked = true;
      }
      CHECK(blocked);
    }
  }
}

TEST_CASE("disjoint budget trees add up") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    auto in = random_instance(3000 + seed, 30, 10);
    std::vector<NodeId> left(in.sources.begin(), in.sources.begin() + 5);
    std::vector<NodeId> right(in.sources.begin() + 5, in.sources.end());
    CurrentConstraints a, b, both;
    a.upper_bounds = b.upper_bounds = Eigen::VectorXd::Zero(30);
    for (auto p : left) a.upper_bounds[p] = in.c.upper_bounds[p];
    for (auto p : right) b.upper_bounds[p] = in.c.upper_bounds[p];
    a.budgets = random_laminar(left, rng, a.upper_bounds);
    b.budgets = random_laminar(right, rng, b.upper_bounds);
    both.upper_bounds = a.upper_bounds + b.upper_bounds;
    both.budgets = a.budgets;
    both.budgets.insert(both.budgets.end(), b.budgets.begin(), b.budgets.end());
    const double sum = worst_case_voltage(in.z, a).value + worst_case_voltage(in.z, b).value;
    CHECK(worst_case_voltage(in.z, both).value == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("scaling conductances scales worst-case voltages inversely") {
  const auto g = grid2d(15, 15);
  const auto pb = synthetic_problem(g, 4, {.query_count = 20});
  const auto base = verify(pb);
  auto scaled = pb;
  scaled.grid = g.scaled(3.5);
  const auto res = verify(scaled);
  for (std::size_t i = 0; i < base.worst.size(); ++i) {
    CHECK(std::abs(res.worst[i] * 3.5 - base.worst[i]) <= 1e-10 * base.worst[i]);
  }
}

TEST_CASE("verify on a three node path") {
  VerificationProblem pb;
  pb.grid = path_graph(3);
  pb.ground_nodes = {0};
  pb.constraints.upper_bounds = Eigen::Vector3d(0.0, 0.0, 1.0);
  pb.query_nodes = {1, 2};
  const auto res = verify(pb);
  CHECK(res.worst[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(res.worst[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(res.witnesses[1] == Eigen::Vector3d(0.0, 0.0, 1.0));

  pb.constraints.upper_bounds.setZero();
  for (double w : verify(pb).worst) CHECK(w == 0.0);

  pb.query_nodes = {0};
  try {
    verify(pb);
    FAIL("expected a grounded query to fail");
  } catch (const Error& e) {
    CHECK(e.operation() == "verify");
    CHECK(std::string(e.what()).find("query node 0") != std::string::npos);
  }
}

TEST_CASE("witness voltages reproduce the reported worst case") {
  const auto g = grid2d(20, 20);
  const auto pb = synthetic_problem(g, 9, {.query_count = 30});
  const auto res = verify(pb);
  const auto sys = ground_system(g, pb.ground_nodes);
  for (std::size_t i = 0; i < res.worst.size(); ++i) {
    const auto& j = res.witnesses[i];
    CHECK(feasible(j, pb.constraints));
    Eigen::VectorXd rhs(static_cast<NodeId>(sys.free_nodes().size()));
    for (std::size_t k = 0; k < sys.free_nodes().size(); ++k) rhs[k] = j[sys.free_nodes()[k]];
    const Eigen::VectorXd v = sys.solve(rhs);
    const double at_query = v[sys.reduced_index(res.query_nodes[i])];
    CHECK(std::abs(at_query - res.worst[i]) <= 1e-8 * std::max(1.0, res.worst[i]));
  }
}

TEST_CASE("synthetic protocol") {
  const auto g = grid2d(50, 50);
  const auto pb = synthetic_problem(g, 1);
  CHECK(pb.ground_nodes.size() == 25);
  CHECK(pb.query_nodes.size() == 100);
  std::set<NodeId> ground(pb.ground_nodes.begin(), pb.ground_nodes.end());
  for (auto q : pb.query_nodes) CHECK(ground.count(q) == 0);
  const auto& c = pb.constraints;
  CHECK(c.upper_bounds.sum() == 250.0);
  REQUIRE(c.budgets.size() == 5);
  CHECK(c.budgets[0].nodes.size() == 250);
  CHECK(c.budgets[0].bound == doctest::Approx(75.0));
  std::size_t regional = 0;
  for (std::size_t k = 1; k < 5; ++k) {
    regional += c.budgets[k].nodes.size();
    CHECK(c.budgets[k].bound == doctest::Approx(0.5 * c.budgets[k].nodes.size()));
  }
  CHECK(regional == 250);
  CHECK_NOTHROW(check_constraints(c, 2500));
  // Same seed, same instance.
  const auto again = synthetic_problem(g, 1);
  CHECK(again.query_nodes == pb.query_nodes);
  CHECK(again.ground_nodes == pb.ground_nodes);
}
