#pragma once

// Reduced basis surrogates for the two Kato integrand families, trained by
// a weak greedy over z = e^{-y} in (0, 1], with residual-based error bounds.
//
//   sigma = -:  (S + z M) w = f,   reduced (B + z C) c = g
//   sigma = +:  (z S + M) w = f,   reduced (z B + C) c = g

#include "fracsolve/common.hpp"
#include "fracsolve/kato.hpp"
#include "fracsolve/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracsolve {

enum class Sigma { Minus = 0, Plus = 1 };
const char* sigma_name(Sigma sigma);

struct RbmModel {
  Sigma sigma = Sigma::Minus;
  int mesh_level = 0;
  Index truth_dim = 0;

  std::vector<double> snapshot_z;
  DenseMatrix U;  // truth_dim x n, M-orthonormal
  DenseMatrix B;  // U^T S U
  DenseMatrix C;  // U^T M U
  Vector g;       // U^T f

  // Residual data. Q (not stored) is a Euclidean-orthonormal basis of
  // span{S u_1, M u_1, S u_2, M u_2, ...}; T = Q^T [S u_1, M u_1, ...],
  // qf = Q^T f, and f_perp_norm = ||f - Q Q^T f||.
  DenseMatrix T;
  Vector qf;
  double f_perp_norm = 0;
  double f_norm = 0;  // Euclidean

  double C2 = 0;
  double lambda_min_M = 0;
  double B_eig_min = 0;
  double B_eig_max = 0;
  double C_eig_min = 1;
  double C_eig_max = 1;

  std::vector<double> history;  // grid max of the estimator for n = 0, 1, ...
  bool stagnated = false;

  Index dimension() const { return U.cols(); }
};

struct ReducedSolution {
  Vector c;
  double z = 0;
  double residual_norm = 0;
  double delta = 0;
  bool clamped = false;
};

struct GreedyConfig {
  double tol = 1e-8;
  int max_basis = 100;
  int grid_size = 128;
  int stagnation_window = 5;
  double reject_ratio = 1e-12;
  std::optional<std::uint64_t> random_first_seed{};
  /// Once the grid maximum is below tol, probe z = 0, dyadic points below
  /// the first grid point and all grid midpoints; points still above tol
  /// join the grid and training continues.
  bool refine_grid = false;
};

/// z_i = i / size, i = 1..size.
std::vector<double> training_grid(int size);

RbmModel greedy_train(Sigma sigma, const KatoSolver& solver, const SparseSymMatrix& s, const SparseSymMatrix& m,
                      const Vector& f, const SpectralBounds& bounds, int mesh_level, const GreedyConfig& config = {});

ReducedSolution reduced_solve_z(const RbmModel& model, double z);
inline ReducedSolution reduced_solve(const RbmModel& model, double y) { return reduced_solve_z(model, std::exp(-y)); }

/// Residual norm via the offline decomposition for coefficients c at z.
double residual_norm(const RbmModel& model, double z, const Vector& c, bool* clamped = nullptr);
/// Delta_{n,sigma} for a residual norm at z.
double estimator_from_residual(const RbmModel& model, double z, double residual);
double estimator(const RbmModel& model, double y, const Vector& c);

/// Truth-space residual ||f - A(z) U c|| (test oracle).
double direct_residual_norm(const RbmModel& model, const SparseSymMatrix& s, const SparseSymMatrix& m,
                            const Vector& f, double z, const Vector& c);

Vector lift(const RbmModel& model, const Vector& c);

struct RbmFractional {
  Vector coefficients;
  double certificate = 0;
  double seconds = 0;
};

/// Online fractional solve. Reduced coefficients are accumulated per sigma
/// and lifted once.
RbmFractional rbm_solve_fractional(const RbmModel& minus, const RbmModel& plus, double s, const RulePair& rules);
double certificate_delta_N(const RbmModel& minus, const RbmModel& plus, double s, const RulePair& rules);

void save_model(const RbmModel& model, const std::string& path);
/// Throws NumericalError on a bad magic header, version, truncated data, or
/// (when given) a truth dimension mismatch.
RbmModel load_model(const std::string& path, std::optional<Index> expected_truth_dim = std::nullopt);

}  // namespace fracsolve
