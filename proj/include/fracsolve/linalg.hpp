#pragma once

// Sparse SPD solves and extremal eigenvalues of the pencil (S, M).

#include "fracsolve/common.hpp"
#include "fracsolve/mesh_fem.hpp"

#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>

namespace fracsolve {

struct SolverConfig {
  double residual_tol = 1e-12;
  int max_refinement_steps = 3;
  // Direct factorization up to the level-8 interior size, CG above.
  Index direct_max_dofs = 254 * 254;
  double cg_tol = 1e-14;
  int cg_max_iterations = 20000;

  double eig_min_rel_tol = 1e-10;
  double eig_max_rel_tol = 1e-4;
  double eig_mass_rel_tol = 1e-10;
  int eig_max_iterations = 600;
  std::uint64_t seed = 20240607;
};

/// Factorization of one SPD matrix. Immutable after construction; solve()
/// may be called concurrently.
class SpdFactorization {
 public:
  SpdFactorization(const SparseMatrix& a, const SolverConfig& config = {});
  explicit SpdFactorization(const SparseSymMatrix& a, const SolverConfig& config = {})
      : SpdFactorization(a.matrix(), config) {}
  ~SpdFactorization();
  SpdFactorization(SpdFactorization&&) noexcept;
  SpdFactorization& operator=(SpdFactorization&&) noexcept;

  /// Solution with ||Ax - b|| <= residual_tol ||b||, or NumericalError.
  Vector solve(const Vector& b) const;

  Index dimension() const;
  bool is_direct() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Solves (alpha S + beta M) w = f for many shifts. S and M share one
/// sparsity pattern, so the fill-reducing ordering is computed once and
/// each shift only needs a numeric factorization.
class ShiftedSolver {
 public:
  ShiftedSolver(const SparseSymMatrix& s, const SparseSymMatrix& m, SolverConfig config = {});
  ~ShiftedSolver();
  ShiftedSolver(ShiftedSolver&&) noexcept;

  Vector solve(double alpha, double beta, const Vector& f) const;
  SparseMatrix combination(double alpha, double beta) const;
  const SolverConfig& config() const;
  Index dimension() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around ShiftedSolver.
Vector solve_shifted(const SparseSymMatrix& s, const SparseSymMatrix& m, double alpha, double beta, const Vector& f,
                     const SolverConfig& config = {});

struct SpectralBounds {
  double lambda_min_SM = 0;
  double lambda_max_SM = 0;
  double lambda_min_M = 0;
  Vector eigvec_min_SM;
  Vector eigvec_max_SM;
  int iterations_min = 0;
  int iterations_max = 0;
  int iterations_mass = 0;

  double C2() const { return 1.0 / lambda_min_SM; }
  double K2() const { return 1.0 / lambda_max_SM; }
  double C2_tilde() const { return std::max(1.0, C2()); }
};

/// Largest eigenvalue mu of B^{-1} A by Lanczos in the B inner product with
/// full reorthogonalization. Returns mu, its Ritz vector (B-normalized),
/// and the iteration count. Throws NumericalError with the best estimate
/// if the Ritz residual has not reached rel_tol * mu after max_iterations.
struct PencilEig {
  double value = 0;
  Vector vector;
  int iterations = 0;
  double residual = 0;
};
PencilEig largest_pencil_eig(const std::function<Vector(const Vector&)>& apply_a,
                             const std::function<Vector(const Vector&)>& solve_b,
                             const std::function<Vector(const Vector&)>& apply_b, Index n, double rel_tol,
                             int max_iterations, std::uint64_t seed);

SpectralBounds extremal_generalized_eigs(const SparseSymMatrix& s, const SparseSymMatrix& m,
                                         const SolverConfig& config = {});

/// sqrt(f^T M^{-1} f).
double inverse_mass_norm(const SpdFactorization& mass, const Vector& f);
double mass_norm(const SparseSymMatrix& m, const Vector& v);

}  // namespace fracsolve
