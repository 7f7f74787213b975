#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "resnet/graph.hpp"

namespace resnet {

enum class SolverMethod { DirectFactorization, ConjugateGradient };
enum class NullspaceHandling { ProjectMean, PinNode };

struct SolverConfig {
  SolverMethod method = SolverMethod::DirectFactorization;
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 0;    // CG only; 0 means 10 * N
  NullspaceHandling nullspace = NullspaceHandling::ProjectMean;
  NodeId pin_node = 0;
};

/// Solves L x = b for a connected graph Laplacian.
///
/// Direct mode factors L with one node pinned once at construction and reuses
/// the factor for every right-hand side. With project-mean handling the
/// right-hand side must be orthogonal to the all-ones vector (its cosine
/// with 1 may not exceed the tolerance) and the returned x has zero mean.
/// With pin-node handling x(pin) = 0 and the pinned row is not enforced.
class LaplacianSolver {
 public:
  explicit LaplacianSolver(const Laplacian& L, SolverConfig cfg = {});

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  NodeId size() const noexcept { return n_; }
  const SolverConfig& config() const noexcept { return cfg_; }

 private:
  Eigen::VectorXd solve_direct(const Eigen::VectorXd& b) const;
  Eigen::VectorXd solve_cg(const Eigen::VectorXd& b) const;
  double residual(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

  NodeId n_;
  SolverConfig cfg_;
  SparseMatrix L_;
  Eigen::VectorXd inv_diag_;
  // Factor of L with the pinned row and column removed.
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

Eigen::VectorXd solve_laplacian(const Laplacian& L, const Eigen::VectorXd& b,
                                const SolverConfig& cfg = {});

/// Effective resistances against one shared factorization.
class ResistanceCalculator {
 public:
  explicit ResistanceCalculator(const WeightedGraph& g);
  double resistance(NodeId s, NodeId t) const;

 private:
  LaplacianSolver solver_;
};

enum class EigenMethod { Automatic, Dense, IterativeLanczos };

struct EigenConfig {
  int r = 5;
  EigenMethod method = EigenMethod::Automatic;
  NodeId dense_cutoff = 100;
  double tolerance = 1e-8;
  std::uint64_t seed = 7;
};

/// Nontrivial eigenpairs lambda_2 .. lambda_{r+1}, ascending. Vectors are
/// orthonormal, orthogonal to the all-ones vector and sign-normalized so
/// their largest-magnitude entry is positive.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

EigenPairs eigen_pairs(const Laplacian& L, const EigenConfig& cfg = {});

struct SmootherConfig {
  int K = 5;
  int sweeps = 10;
  std::uint64_t seed = 1;
};

/// Low-pass filtered random vectors: each column is a seeded Gaussian vector
/// made orthogonal to 1 and unit-normalized, relaxed by `sweeps` symmetric
/// Gauss-Seidel sweeps on L b = 0 and re-orthogonalized to 1.
Eigen::MatrixXd smooth_embedding(const Laplacian& L,
                                 const SmootherConfig& cfg = {});

// One forward plus one backward Gauss-Seidel pass on L b = 0, in place.
void symmetric_gauss_seidel(const Adjacency& adj, Eigen::Ref<Eigen::VectorXd> b);

void remove_mean(Eigen::Ref<Eigen::VectorXd> v);

/// Spectral drawing coordinates: columns u_2 and u_3.
Eigen::MatrixXd spectral_layout(const Laplacian& L, const EigenConfig& cfg = {});

}  // namespace resnet
