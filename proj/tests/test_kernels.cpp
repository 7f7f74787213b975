#include <doctest.h>

#include <cmath>
#include <numbers>

#include "resnet/error.hpp"
#include "resnet/kernels.hpp"
#include "support.hpp"

using namespace resnet;
using namespace resnet::testing;

namespace {

SolverConfig cg_config() {
  SolverConfig cfg;
  cfg.method = SolverMethod::ConjugateGradient;
  return cfg;
}

}  // namespace

TEST_CASE("solve_laplacian on tiny systems") {
  const auto L = build_laplacian(WeightedGraph(2, {{0, 1, 1.0}}));
  const Eigen::VectorXd x = solve_laplacian(L, Eigen::Vector2d(1, -1));
  CHECK(x[0] == doctest::Approx(0.5));
  CHECK(x[1] == doctest::Approx(-0.5));
  CHECK(solve_laplacian(L, Eigen::Vector2d::Zero()).norm() == 0.0);
  CHECK(solve_laplacian(L, Eigen::Vector2d(1, -1), cg_config())[0] == doctest::Approx(0.5));
}

TEST_CASE("solve_laplacian matches the dense pseudoinverse") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto g = random_connected_graph(100, 150, seed);
    const auto L = build_laplacian(g);
    const Eigen::MatrixXd pinv = dense_pinv(dense_laplacian(g));
    const Eigen::VectorXd b = random_zero_mean(100, seed + 11);
    const Eigen::VectorXd expect = pinv * b;
    for (const auto& cfg : {SolverConfig{}, cg_config()}) {
      const Eigen::VectorXd x = solve_laplacian(L, b, cfg);
      CHECK((x - expect).norm() / expect.norm() <= 1e-8);
      CHECK(std::abs(x.mean()) < 1e-12);
    }
  }
}

TEST_CASE("every accepted solve meets the residual tolerance") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = random_connected_graph(40, 30 + seed % 20, seed, 0.01, 100.0);
    const auto L = build_laplacian(g);
    const Eigen::VectorXd b = random_zero_mean(40, seed);
    const auto cfg = seed % 2 ? cg_config() : SolverConfig{};
    const Eigen::VectorXd x = solve_laplacian(L, b, cfg);
    const double res = (dense_laplacian(g) * x - b).norm() / b.norm();
    CHECK(res <= cfg.tolerance);
  }
}

TEST_CASE("solve_laplacian error paths") {
  const auto L = build_laplacian(path_graph(6));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(6);
  b[0] = 1.0;
  try {
    solve_laplacian(L, b);
    FAIL("expected inconsistent-rhs");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InconsistentRhs);
  }

  SolverConfig tight = cg_config();
  tight.max_iterations = 1;
  b[5] = -1.0;
  try {
    solve_laplacian(L, b, tight);
    FAIL("expected solver divergence");
  } catch (const SolverError& e) {
    CHECK(e.kind() == ErrorKind::SolverDivergence);
    CHECK(e.residual() > tight.tolerance);
  }

  const WeightedGraph split(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  CHECK_THROWS_AS(LaplacianSolver(build_laplacian(split)), Error);
  CHECK_THROWS_AS(solve_laplacian(L, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("pin-node handling fixes the pinned potential") {
  const auto g = random_connected_graph(30, 20, 4);
  const auto L = build_laplacian(g);
  SolverConfig cfg;
  cfg.nullspace = NullspaceHandling::PinNode;
  cfg.pin_node = 7;
  Eigen::VectorXd b = random_matrix(30, 1, 2).col(0);  // not zero-mean
  for (auto method : {SolverMethod::DirectFactorization, SolverMethod::ConjugateGradient}) {
    cfg.method = method;
    const Eigen::VectorXd x = solve_laplacian(L, b, cfg);
    CHECK(x[7] == 0.0);
    Eigen::VectorXd r = dense_laplacian(g) * x - b;
    r[7] = 0.0;
    CHECK(r.norm() <= 1e-9 * b.norm());
  }
}

TEST_CASE("eigen_pairs known spectra") {
  EigenConfig one;
  one.r = 1;
  const auto edge = eigen_pairs(build_laplacian(WeightedGraph(2, {{0, 1, 1.0}})), one);
  CHECK(edge.values[0] == doctest::Approx(2.0));
  CHECK(std::abs(edge.vectors(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(edge.vectors(0, 0) == doctest::Approx(-edge.vectors(1, 0)));

  std::vector<Edge> k4;
  for (NodeId a = 0; a < 4; ++a)
    for (NodeId b = a + 1; b < 4; ++b) k4.push_back({a, b, 1.0});
  EigenConfig three;
  three.r = 3;
  const auto complete = eigen_pairs(build_laplacian(WeightedGraph(4, k4)), three);
  for (int i = 0; i < 3; ++i) CHECK(complete.values[i] == doctest::Approx(4.0));

  const auto cycle = eigen_pairs(build_laplacian(cycle_graph(8)), three);
  const double expect = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi / 8.0);
  CHECK(cycle.values[0] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(cycle.values[1] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(cycle.values[0] == doctest::Approx(0.5858).epsilon(1e-4));
  CHECK(cycle.values[0] == doctest::Approx(dense_eigenvalues(cycle_graph(8))[1]).epsilon(1e-12));
}

TEST_CASE("iterative eigenpairs agree with the dense solver") {
  struct Case {
    WeightedGraph g;
    int r;
  };
  // Square grids have repeated eigenvalues; both copies must be found.
  const std::vector<Case> cases = {
      {random_connected_graph(400, 300, 5), 8},
      {grid2d(20, 20), 12},
      {grid2d(32, 32), 50},
      {grid2d(30, 30), 30},
      {random_connected_graph(300, 0, 6, 0.1, 10.0), 5},
  };
  for (const auto& c : cases) {
    const auto L = build_laplacian(c.g);
    EigenConfig cfg;
    cfg.r = c.r;
    cfg.method = EigenMethod::IterativeLanczos;
    const auto pairs = eigen_pairs(L, cfg);
    const Eigen::VectorXd dense = dense_eigenvalues(c.g);
    for (int i = 0; i < c.r; ++i) {
      CHECK(rel_err(pairs.values[i], dense[i + 1]) <= 1e-8);
      const Eigen::VectorXd u = pairs.vectors.col(i);
      CHECK((L.matrix() * u - pairs.values[i] * u).norm() <= cfg.tolerance * pairs.values[i]);
    }
    const Eigen::MatrixXd gram = pairs.vectors.transpose() * pairs.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(c.r, c.r)).cwiseAbs().maxCoeff() <= 1e-8);
    const double n = static_cast<double>(c.g.node_count());
    for (int i = 0; i < c.r; ++i) CHECK(std::abs(pairs.vectors.col(i).sum()) <= 1e-8 * std::sqrt(n));
  }
}

TEST_CASE("eigen_pairs orthonormality on random graphs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_connected_graph(40, 50, seed);
    EigenConfig cfg;
    cfg.r = 10;
    const auto pairs = eigen_pairs(build_laplacian(g), cfg);
    const Eigen::MatrixXd gram = pairs.vectors.transpose() * pairs.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-8);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(pairs.vectors.col(i).sum()) <= 1e-8 * std::sqrt(40.0));
    for (int i = 1; i < 10; ++i) CHECK(pairs.values[i - 1] <= pairs.values[i]);
  }
}

TEST_CASE("eigen_pairs rejects bad input") {
  const WeightedGraph split(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  CHECK_THROWS_AS(eigen_pairs(build_laplacian(split)), Error);
  EigenConfig cfg;
  cfg.r = 4;
  CHECK_THROWS_AS(eigen_pairs(build_laplacian(path_graph(4)), cfg), Error);
}

TEST_CASE("smooth_embedding is deterministic") {
  const auto L = build_laplacian(path_graph(3));
  SmootherConfig cfg;
  cfg.K = 1;
  cfg.seed = 42;
  const Eigen::MatrixXd a = smooth_embedding(L, cfg);
  const Eigen::MatrixXd b = smooth_embedding(L, cfg);
  CHECK(a == b);
  cfg.seed = 43;
  CHECK(smooth_embedding(L, cfg) != a);
}

TEST_CASE("smoothing drives columns toward the nullspace") {
  const auto L = build_laplacian(random_connected_graph(60, 40, 8));
  double previous = std::numeric_limits<double>::infinity();
  for (int sweeps : {0, 1, 2, 5, 10, 50, 200, 2000}) {
    SmootherConfig cfg;
    cfg.K = 1;
    cfg.sweeps = sweeps;
    const double norm = smooth_embedding(L, cfg).col(0).norm();
    CHECK(norm <= previous);
    previous = norm;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("Gauss-Seidel sweeps never raise the energy ratio") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_connected_graph(50, 60, seed);
    const auto L = build_laplacian(g);
    const auto adj = build_adjacency(g);
    SmootherConfig cfg;
    cfg.K = 3;
    cfg.sweeps = 0;
    cfg.seed = seed;
    const Eigen::MatrixXd seeds = smooth_embedding(L, cfg);
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd b = seeds.col(k);
      double ratio = quadratic_form(L, b) / b.squaredNorm();
      const double initial = ratio;
      for (int s = 0; s < 10; ++s) {
        symmetric_gauss_seidel(adj, b);
        const double next = quadratic_form(L, b) / b.squaredNorm();
        CHECK(next <= ratio * (1 + 1e-12));
        ratio = next;
      }
      cfg.sweeps = 10;
      const Eigen::VectorXd smoothed = smooth_embedding(L, cfg).col(k);
      cfg.sweeps = 0;
      CHECK(quadratic_form(L, smoothed) / smoothed.squaredNorm() <= initial);
      CHECK(std::abs(smoothed.sum()) < 1e-10);
    }
  }
}

TEST_CASE("spectral_layout") {
  const auto path = build_laplacian(path_graph(10));
  const Eigen::MatrixXd xy = spectral_layout(path);
  REQUIRE(xy.cols() == 2);
  const bool increasing = xy(1, 0) > xy(0, 0);
  for (NodeId i = 1; i < 10; ++i) CHECK((xy(i, 0) > xy(i - 1, 0)) == increasing);

  EigenConfig two;
  two.r = 2;
  CHECK(xy == eigen_pairs(path, two).vectors);

  const Eigen::MatrixXd ring = spectral_layout(build_laplacian(cycle_graph(12)));
  for (NodeId i = 0; i < 12; ++i) {
    CHECK(ring.row(i).squaredNorm() == doctest::Approx(2.0 / 12.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(spectral_layout(build_laplacian(path_graph(2))), Error);
}
