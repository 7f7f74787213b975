#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "resnet/error.hpp"
#include "resnet/measurements.hpp"
#include "support.hpp"

using namespace resnet;
using namespace resnet::testing;

namespace {

double projected_distance(const Eigen::MatrixXd& X, NodeId s, NodeId t) {
  return (X.row(s) - X.row(t)).squaredNorm();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("gaussian currents are centered and unit norm") {
  const auto g = random_connected_graph(80, 120, 3);
  const auto ms = generate_gaussian(g, 50, 11);
  CHECK(ms.X.rows() == 80);
  CHECK(ms.X.cols() == 50);
  CHECK(ms.has_currents());
  CHECK(ms.source == MeasurementSource::Gaussian);
  for (Eigen::Index i = 0; i < ms.Y.cols(); ++i) {
    CHECK(std::abs(ms.Y.col(i).mean()) <= 1e-12);
    CHECK(std::abs(ms.Y.col(i).norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("gaussian voltages solve the Laplacian system") {
  const auto g = random_connected_graph(120, 200, 5);
  const auto ms = generate_gaussian(g, 20, 2);
  const Eigen::MatrixXd L = dense_laplacian(g);
  for (Eigen::Index i = 0; i < ms.X.cols(); ++i) {
    const Eigen::VectorXd x = ms.X.col(i);
    CHECK((L * x - ms.Y.col(i)).norm() <= 1e-10);
    const double dissipation = ms.Y.col(i).dot(x);
    CHECK(dissipation >= 0.0);
    CHECK(std::abs(dissipation - x.dot(L * x)) <= 1e-8);
  }
}

TEST_CASE("gaussian generation is reproducible and order independent") {
  const auto g = random_connected_graph(60, 60, 8);
  const auto a = generate_gaussian(g, 10, 99);
  const auto b = generate_gaussian(g, 10, 99);
  CHECK(a.X == b.X);
  CHECK(a.Y == b.Y);
  // Column i depends only on (seed, i).
  const auto wide = generate_gaussian(g, 15, 99);
  CHECK(wide.Y.leftCols(10) == a.Y);
  const auto other = generate_gaussian(g, 10, 100);
  CHECK(other.Y != a.Y);
}

TEST_CASE("gaussian generation rejects bad input") {
  const WeightedGraph split(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  CHECK_THROWS_AS(generate_gaussian(split, 5, 1), Error);
  CHECK_THROWS_AS(generate_gaussian(path_graph(4), 0, 1), Error);
}

TEST_CASE("jl measurement count uses the natural log") {
  JlConfig cfg;
  cfg.epsilon = 0.5;
  CHECK(jl_measurement_count(100, cfg) ==
        static_cast<int>(std::ceil(24.0 * std::log(100.0) / 0.25)));
  CHECK(jl_measurement_count(100, cfg) == 443);
  cfg.log_base = LogBase::Two;
  CHECK(jl_measurement_count(100, cfg) ==
        static_cast<int>(std::ceil(24.0 * std::log2(100.0) / 0.25)));
  cfg.m_override = 17;
  CHECK(jl_measurement_count(100, cfg) == 17);
  JlConfig bad;
  bad.epsilon = 1.0;
  CHECK_THROWS_AS(jl_measurement_count(100, bad), Error);
}

TEST_CASE("jl on a single edge recovers the resistance exactly") {
  for (double w : {1.0, 0.25, 3.0}) {
    const WeightedGraph g(2, {{0, 1, w}});
    for (int m : {1, 4, 9}) {
      JlConfig cfg;
      cfg.m_override = m;
      const auto ms = generate_jl(g, cfg, 5);
      CHECK(ms.X.cols() == m);
      CHECK(projected_distance(ms.X, 0, 1) == doctest::Approx(1.0 / w).epsilon(1e-12));
    }
  }
}

TEST_CASE("jl currents sum to zero and match the voltages") {
  const auto g = random_connected_graph(30, 40, 4);
  JlConfig cfg;
  cfg.m_override = 12;
  const auto ms = generate_jl(g, cfg, 3);
  for (Eigen::Index i = 0; i < ms.Y.cols(); ++i) {
    CHECK(std::abs(ms.Y.col(i).sum()) <= 1e-12);
  }
  const Eigen::MatrixXd L = dense_laplacian(g);
  CHECK((L * ms.X - ms.Y).norm() <= 1e-9);
}

TEST_CASE("jl projections preserve resistances on a 64-node grid") {
  const auto g = grid2d(8, 8);
  const Eigen::MatrixXd P = dense_pinv(dense_laplacian(g));
  JlConfig cfg;
  cfg.epsilon = 0.3;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<NodeId> node(0, 63);
  int inside = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ms = generate_jl(g, cfg, seed);
    for (int k = 0; k < 50; ++k) {
      NodeId s = node(rng), t = node(rng);
      while (t == s) t = node(rng);
      const double r = dense_resistance(P, s, t);
      const double z = projected_distance(ms.X, s, t);
      inside += (z > (1.0 - cfg.epsilon) * r && z < (1.0 + cfg.epsilon) * r);
      ++total;
    }
  }
  MESSAGE("jl inside band: " << inside << " / " << total);
  CHECK(inside >= 0.9 * total);
}

TEST_CASE("jl dispersion shrinks as measurements grow") {
  const auto g = random_connected_graph(500, 1000, 17);
  const Eigen::MatrixXd P = dense_pinv(dense_laplacian(g));
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<NodeId> node(0, 499);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  while (pairs.size() < 200) {
    const NodeId s = node(rng), t = node(rng);
    if (s != t) pairs.push_back({s, t});
  }
  std::vector<double> dispersion;
  for (int m : {10, 50, 200}) {
    JlConfig cfg;
    cfg.m_override = m;
    const auto ms = generate_jl(g, cfg, 31);
    std::vector<double> dev;
    for (const auto& [s, t] : pairs) {
      dev.push_back(std::abs(projected_distance(ms.X, s, t) / dense_resistance(P, s, t) - 1.0));
    }
    dispersion.push_back(median(dev));
  }
  MESSAGE("median |ratio-1|: " << dispersion[0] << " " << dispersion[1] << " " << dispersion[2]);
  CHECK(dispersion[0] > dispersion[1]);
  CHECK(dispersion[1] > dispersion[2]);
}

TEST_CASE("zero noise leaves voltages untouched") {
  const auto ms = generate_gaussian(random_connected_graph(40, 40, 1), 8, 2);
  const auto noisy = add_noise(ms, 0.0, 5);
  CHECK(noisy.X == ms.X);
  CHECK(noisy.Y == ms.Y);
  CHECK(noisy.noise_level == 0.0);
}

TEST_CASE("noise has the requested relative magnitude") {
  const auto ms = generate_gaussian(random_connected_graph(40, 40, 1), 8, 2);
  for (double zeta : {0.01, 0.1, 0.5}) {
    const auto noisy = add_noise(ms, zeta, 9);
    CHECK(noisy.noise_level == zeta);
    CHECK(noisy.Y == ms.Y);
    for (Eigen::Index i = 0; i < ms.X.cols(); ++i) {
      const double moved = (noisy.X.col(i) - ms.X.col(i)).norm();
      CHECK(moved == doctest::Approx(zeta * ms.X.col(i).norm()).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(add_noise(ms, -0.1, 1), Error);
}

TEST_CASE("noise commutes with column permutation") {
  const auto ms = generate_gaussian(random_connected_graph(40, 40, 1), 8, 2);
  std::vector<Eigen::Index> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  MeasurementSet permuted = ms;
  for (Eigen::Index i = 0; i < 8; ++i) {
    permuted.X.col(i) = ms.X.col(perm[i]);
    permuted.Y.col(i) = ms.Y.col(perm[i]);
  }
  const auto a = add_noise(ms, 0.3, 12);
  const auto b = add_noise(permuted, 0.3, 12);
  for (Eigen::Index i = 0; i < 8; ++i) CHECK(b.X.col(i) == a.X.col(perm[i]));
}

TEST_CASE("full subsampling is the identity") {
  const auto ms = generate_gaussian(random_connected_graph(30, 30, 6), 5, 1);
  const auto sub = subsample_nodes(ms, 1.0, 3);
  CHECK(sub.measurements.X == ms.X);
  CHECK(sub.retained.size() == 30);
  for (NodeId i = 0; i < 30; ++i) CHECK(sub.retained[i] == i);
  CHECK_FALSE(sub.measurements.has_currents());
}

TEST_CASE("subsampling keeps the ceiling fraction in increasing order") {
  const auto ms = generate_gaussian(random_connected_graph(103, 100, 6), 5, 1);
  for (double f : {0.1, 0.2, 0.5}) {
    const auto sub = subsample_nodes(ms, f, 8);
    const auto expect = static_cast<std::size_t>(std::ceil(f * 103));
    CHECK(sub.retained.size() == expect);
    CHECK(sub.measurements.X.rows() == static_cast<Eigen::Index>(expect));
    for (std::size_t i = 1; i < sub.retained.size(); ++i) {
      CHECK(sub.retained[i - 1] < sub.retained[i]);
    }
    for (std::size_t i = 0; i < sub.retained.size(); ++i) {
      CHECK(sub.measurements.X.row(i) == ms.X.row(sub.retained[i]));
    }
  }
  // 0.1 * 30 is 3.0000000000000004 in floating point; it must still keep 3.
  const auto ms30 = generate_gaussian(random_connected_graph(30, 30, 6), 5, 1);
  CHECK(subsample_nodes(ms30, 0.1, 1).retained.size() == 3);
}

TEST_CASE("subsampling below three nodes fails") {
  const auto ms = generate_gaussian(random_connected_graph(20, 10, 6), 5, 1);
  try {
    subsample_nodes(ms, 0.1, 1);
    FAIL("expected too-few-nodes");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewNodes);
  }
  CHECK_THROWS_AS(subsample_nodes(ms, 0.0, 1), Error);
  CHECK_THROWS_AS(subsample_nodes(ms, 1.5, 1), Error);
}

TEST_CASE("source names round trip") {
  for (auto s : {MeasurementSource::Gaussian, MeasurementSource::JohnsonLindenstrauss,
                 MeasurementSource::External}) {
    CHECK(parse_measurement_source(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_measurement_source("bogus"), Error);
}
