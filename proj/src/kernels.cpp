#include "resnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <arpack.hpp>

#include "resnet/error.hpp"

namespace resnet {
namespace {

constexpr const char* kModule = "spectral-kernels";

SparseMatrix drop_row_and_column(const SparseMatrix& L, NodeId p) {
  const NodeId n = L.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(L.nonZeros()));
  for (Eigen::Index col = 0; col < L.outerSize(); ++col) {
    if (col == p) continue;
    for (SparseMatrix::InnerIterator it(L, col); it; ++it) {
      if (it.row() == p) continue;
      triplets.emplace_back(it.row() - (it.row() > p), col - (col > p),
                            it.value());
    }
  }
  SparseMatrix out(n - 1, n - 1);
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

Eigen::VectorXd without(const Eigen::VectorXd& v, NodeId p) {
  Eigen::VectorXd out(v.size() - 1);
  out.head(p) = v.head(p);
  out.tail(v.size() - 1 - p) = v.tail(v.size() - 1 - p);
  return out;
}

Eigen::VectorXd with_zero(const Eigen::VectorXd& v, NodeId p) {
  Eigen::VectorXd out(v.size() + 1);
  out.head(p) = v.head(p);
  out[p] = 0.0;
  out.tail(v.size() - p) = v.tail(v.size() - p);
  return out;
}

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

}  // namespace

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void remove_mean(Eigen::Ref<Eigen::VectorXd> v) {
  if (v.size() > 0) v.array() -= v.mean();
}

// ---------------------------------------------------------------------------
// Linear solves

LaplacianSolver::LaplacianSolver(const Laplacian& L, SolverConfig cfg)
    : n_(L.size()), cfg_(cfg), L_(L.matrix()) {
  if (!(cfg_.tolerance > 0.0 && cfg_.tolerance < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, kModule, "solve_laplacian",
                "tolerance must lie in (0, 1)");
  }
  if (n_ < 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "solve_laplacian",
                "empty graph");
  }
  if (cfg_.nullspace == NullspaceHandling::ProjectMean) cfg_.pin_node = 0;
  if (cfg_.pin_node < 0 || cfg_.pin_node >= n_) {
    throw Error(ErrorKind::InvalidArgument, kModule, "solve_laplacian",
                "pin node " + std::to_string(cfg_.pin_node) + " out of range");
  }
  if (!is_connected(L.graph())) {
    throw Error(ErrorKind::Connectivity, kModule, "solve_laplacian",
                "Laplacian of a disconnected graph");
  }
  if (cfg_.max_iterations <= 0) {
    cfg_.max_iterations = static_cast<int>(std::min<NodeId>(10 * n_, 1 << 30));
  }
  if (n_ == 1) return;

  if (cfg_.method == SolverMethod::DirectFactorization) {
    factor_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
    factor_->compute(drop_row_and_column(L_, cfg_.pin_node));
    if (factor_->info() != Eigen::Success) {
      throw Error(ErrorKind::SolverDivergence, kModule, "solve_laplacian",
                  "factorization of the pinned Laplacian failed");
    }
  } else {
    inv_diag_ = L_.diagonal().cwiseInverse();
  }
}

double LaplacianSolver::residual(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& b) const {
  Eigen::VectorXd r = b - L_ * x;
  if (cfg_.nullspace == NullspaceHandling::PinNode) r[cfg_.pin_node] = 0.0;
  Eigen::VectorXd bb = b;
  if (cfg_.nullspace == NullspaceHandling::PinNode) bb[cfg_.pin_node] = 0.0;
  const double nb = bb.norm();
  return nb > 0.0 ? r.norm() / nb : r.norm();
}

Eigen::VectorXd LaplacianSolver::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) {
    throw Error(ErrorKind::Dimension, kModule, "solve_laplacian",
                "rhs length " + std::to_string(b.size()) + " != N = " +
                    std::to_string(n_));
  }
  Eigen::VectorXd rhs = b;
  if (cfg_.nullspace == NullspaceHandling::ProjectMean) {
    const double norm = b.norm();
    if (norm == 0.0) return Eigen::VectorXd::Zero(n_);
    const double cosine =
        std::abs(b.sum()) / (std::sqrt(static_cast<double>(n_)) * norm);
    if (cosine > cfg_.tolerance) {
      throw Error(ErrorKind::InconsistentRhs, kModule, "solve_laplacian",
                  "right-hand side is not orthogonal to the all-ones vector "
                  "(cosine " + short_number(cosine) + ")");
    }
    remove_mean(rhs);
  }
  if (n_ == 1) return Eigen::VectorXd::Zero(1);

  Eigen::VectorXd x = cfg_.method == SolverMethod::DirectFactorization
                          ? solve_direct(rhs)
                          : solve_cg(rhs);
  if (cfg_.nullspace == NullspaceHandling::ProjectMean) remove_mean(x);
  return x;
}

Eigen::MatrixXd LaplacianSolver::solve(const Eigen::MatrixXd& B) const {
  Eigen::MatrixXd X(B.rows(), B.cols());
  for (Eigen::Index i = 0; i < B.cols(); ++i) X.col(i) = solve(Eigen::VectorXd(B.col(i)));
  return X;
}

Eigen::VectorXd LaplacianSolver::solve_direct(const Eigen::VectorXd& b) const {
  const NodeId p = cfg_.pin_node;
  Eigen::VectorXd x = with_zero(factor_->solve(without(b, p)), p);
  double res = residual(x, b);
  // A few steps of iterative refinement absorb the factor's rounding on
  // badly scaled trees.
  for (int step = 0; step < 3 && res > cfg_.tolerance; ++step) {
    Eigen::VectorXd r = b - L_ * x;
    if (cfg_.nullspace == NullspaceHandling::ProjectMean) remove_mean(r);
    x += with_zero(factor_->solve(without(r, p)), p);
    res = residual(x, b);
  }
  if (!(res <= cfg_.tolerance)) {
    throw SolverError("solve_laplacian",
                      "direct solve residual " + short_number(res) +
                          " above tolerance",
                      res);
  }
  return x;
}

Eigen::VectorXd LaplacianSolver::solve_cg(const Eigen::VectorXd& b) const {
  const bool pinned = cfg_.nullspace == NullspaceHandling::PinNode;
  const NodeId p = cfg_.pin_node;
  const auto apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = L_ * v;
    if (pinned) out[p] = 0.0;
    return out;
  };
  Eigen::VectorXd rhs = b;
  if (pinned) rhs[p] = 0.0;
  const double target = cfg_.tolerance * rhs.norm();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = inv_diag_.cwiseProduct(r);
  if (pinned) z[p] = 0.0;
  Eigen::VectorXd d = z;
  double rz = r.dot(z);
  int it = 0;
  for (; it < cfg_.max_iterations && r.norm() > target; ++it) {
    const Eigen::VectorXd q = apply(d);
    const double alpha = rz / d.dot(q);
    x += alpha * d;
    r -= alpha * q;
    if (!pinned) remove_mean(r);
    z = inv_diag_.cwiseProduct(r);
    if (pinned) z[p] = 0.0;
    const double rz_next = r.dot(z);
    d = z + (rz_next / rz) * d;
    rz = rz_next;
  }
  const double res = residual(x, b);
  if (!(res <= cfg_.tolerance)) {
    throw SolverError("solve_laplacian",
                      "conjugate gradient stopped after " + std::to_string(it) +
                          " iterations with residual " + short_number(res),
                      res);
  }
  return x;
}

Eigen::VectorXd solve_laplacian(const Laplacian& L, const Eigen::VectorXd& b,
                                const SolverConfig& cfg) {
  return LaplacianSolver(L, cfg).solve(b);
}

ResistanceCalculator::ResistanceCalculator(const WeightedGraph& g)
    : solver_(build_laplacian(g)) {}

double ResistanceCalculator::resistance(NodeId s, NodeId t) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(solver_.size());
  b[s] = 1.0;
  b[t] = -1.0;
  const Eigen::VectorXd x = solver_.solve(b);
  return x[s] - x[t];
}

// ---------------------------------------------------------------------------
// Eigenpairs

namespace {

EigenPairs dense_pairs(const Laplacian& L, int r) {
  const Eigen::MatrixXd dense(L.matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::EigensolverFailure, kModule, "eigen_pairs",
                "dense symmetric eigensolver failed");
  }
  EigenPairs out;
  out.values = es.eigenvalues().segment(1, r);
  out.vectors = es.eigenvectors().middleCols(1, r);
  for (int i = 0; i < r; ++i) {
    remove_mean(out.vectors.col(i));
    out.vectors.col(i).normalize();
  }
  return out;
}

// Implicitly restarted Lanczos (ARPACK) on L^+ applied through the direct
// solver. Its largest eigenvalues on the complement of 1 are the
// reciprocals of lambda_2, lambda_3, ...
EigenPairs arpack_pairs(const Laplacian& L, const EigenConfig& cfg) {
  const a_int n = static_cast<a_int>(L.size());
  const a_int nev = cfg.r;
  const a_int ncv = std::min<a_int>(n - 1, std::max<a_int>(2 * nev + 1, nev + 20));
  if (ncv <= nev) return dense_pairs(L, cfg.r);

  // The eigen-residual test below is the accuracy guarantee; the inner
  // solves only need to be accurate enough for Lanczos to converge.
  SolverConfig inner;
  inner.tolerance = 1e-6;
  const LaplacianSolver solver(L, inner);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd resid(n);
  for (a_int i = 0; i < n; ++i) resid[i] = normal(rng);
  remove_mean(resid);

  const a_int lworkl = ncv * (ncv + 8);
  Eigen::MatrixXd V(n, ncv);
  std::vector<double> workd(3 * static_cast<std::size_t>(n));
  std::vector<double> workl(static_cast<std::size_t>(lworkl));
  a_int iparam[11] = {};
  a_int ipntr[14] = {};
  iparam[0] = 1;     // exact shifts
  iparam[2] = 3000;  // restart cap
  iparam[6] = 1;     // standard mode, OP = A
  a_int ido = 0;
  a_int info = 1;    // resid holds the start vector
  const double tol = 0.0;  // machine precision
  Eigen::VectorXd x(n);
  while (true) {
    arpack::saupd(ido, arpack::bmat::identity, n, arpack::which::largest_algebraic,
                  nev, tol, resid.data(), ncv, V.data(), n, iparam, ipntr,
                  workd.data(), workl.data(), lworkl, info);
    if (ido != 1 && ido != -1) break;
    x = Eigen::Map<const Eigen::VectorXd>(&workd[ipntr[0] - 1], n);
    remove_mean(x);
    Eigen::Map<Eigen::VectorXd>(&workd[ipntr[1] - 1], n) = solver.solve(x);
  }
  if (info < 0 || info == 1) {
    throw Error(ErrorKind::EigensolverFailure, kModule, "eigen_pairs",
                info == 1 ? "Lanczos iteration hit its restart cap"
                          : "Lanczos iteration failed (ARPACK info " +
                                std::to_string(info) + ")");
  }
  std::vector<a_int> select(static_cast<std::size_t>(ncv));
  Eigen::VectorXd theta(nev);
  Eigen::MatrixXd Z(n, nev);
  arpack::seupd(1, arpack::howmny::ritz_vectors, select.data(), theta.data(), Z.data(),
                n, 0.0, arpack::bmat::identity, n, arpack::which::largest_algebraic,
                nev, tol, resid.data(), ncv, V.data(), n, iparam, ipntr,
                workd.data(), workl.data(), lworkl, info);
  if (info != 0) {
    throw Error(ErrorKind::EigensolverFailure, kModule, "eigen_pairs",
                "Ritz vector extraction failed (ARPACK info " + std::to_string(info) + ")");
  }

  const SparseMatrix& A = L.matrix();
  EigenPairs out;
  out.values.resize(nev);
  out.vectors.resize(n, nev);
  for (a_int i = 0; i < nev; ++i) {
    // theta is ascending, so the largest (smallest lambda) comes last.
    auto u = out.vectors.col(i);
    u = Z.col(nev - 1 - i);
    remove_mean(u);
    u.normalize();
    const Eigen::VectorXd Lu = A * u;
    const double lambda = u.dot(Lu);
    out.values[i] = lambda;
    if ((Lu - lambda * u).norm() > cfg.tolerance * lambda) {
      throw Error(ErrorKind::EigensolverFailure, kModule, "eigen_pairs",
                  "eigenpair " + std::to_string(i + 2) +
                      " misses the residual tolerance");
    }
  }
  return out;
}

}  // namespace

EigenPairs eigen_pairs(const Laplacian& L, const EigenConfig& cfg) {
  const NodeId n = L.size();
  if (cfg.r < 1 || cfg.r > n - 1) {
    throw Error(ErrorKind::InvalidArgument, kModule, "eigen_pairs",
                "r = " + std::to_string(cfg.r) + " outside [1, N-1] for N = " +
                    std::to_string(n));
  }
  if (!is_connected(L.graph())) {
    throw Error(ErrorKind::Connectivity, kModule, "eigen_pairs",
                "graph is disconnected; lambda_2 = 0");
  }
  bool dense = cfg.method == EigenMethod::Dense;
  if (cfg.method == EigenMethod::Automatic) {
    dense = n <= cfg.dense_cutoff || 4 * static_cast<NodeId>(cfg.r) >= n;
  }
  EigenPairs out = dense ? dense_pairs(L, cfg.r) : arpack_pairs(L, cfg);

  // Sort ascending (Ritz values are nearly sorted already) and fix signs.
  std::vector<int> order(static_cast<std::size_t>(cfg.r));
  for (int i = 0; i < cfg.r; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return out.values[a] < out.values[b]; });
  EigenPairs sorted;
  sorted.values.resize(cfg.r);
  sorted.vectors.resize(n, cfg.r);
  for (int i = 0; i < cfg.r; ++i) {
    sorted.values[i] = out.values[order[i]];
    sorted.vectors.col(i) = out.vectors.col(order[i]);
    normalize_sign(sorted.vectors.col(i));
  }
  return sorted;
}

// ---------------------------------------------------------------------------
// Smoothing

void symmetric_gauss_seidel(const Adjacency& adj, Eigen::Ref<Eigen::VectorXd> b) {
  const auto n = static_cast<NodeId>(adj.offsets.size()) - 1;
  const auto relax = [&](NodeId v) {
    double sum = 0.0;
    double diag = 0.0;
    for (auto k = adj.offsets[v]; k < adj.offsets[v + 1]; ++k) {
      sum += adj.weights[k] * b[adj.neighbors[k]];
      diag += adj.weights[k];
    }
    if (diag > 0.0) b[v] = sum / diag;
  };
  for (NodeId v = 0; v < n; ++v) relax(v);
  for (NodeId v = n - 1; v >= 0; --v) relax(v);
}

Eigen::MatrixXd smooth_embedding(const Laplacian& L, const SmootherConfig& cfg) {
  if (cfg.K < 1 || cfg.sweeps < 0) {
    throw Error(ErrorKind::InvalidArgument, kModule, "smooth_embedding",
                "need K >= 1 and sweeps >= 0");
  }
  const NodeId n = L.size();
  const Adjacency adj = build_adjacency(L.graph());
  Eigen::MatrixXd B(n, cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    auto col = B.col(k);
    for (NodeId i = 0; i < n; ++i) col[i] = normal(rng);
    remove_mean(col);
    const double norm = col.norm();
    if (norm > 0.0) col /= norm;
    for (int s = 0; s < cfg.sweeps; ++s) symmetric_gauss_seidel(adj, col);
    remove_mean(col);
  }
  return B;
}

Eigen::MatrixXd spectral_layout(const Laplacian& L, const EigenConfig& cfg) {
  if (L.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, kModule, "spectral_layout",
                "layout needs at least 3 nodes");
  }
  EigenConfig two = cfg;
  two.r = 2;
  return eigen_pairs(L, two).vectors;
}

}  // namespace resnet
