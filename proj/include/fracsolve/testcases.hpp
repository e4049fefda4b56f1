#pragma once

// Manufactured solutions of (-Delta)^s u = f on the unit square with
// homogeneous Dirichlet data.

#include "fracsolve/common.hpp"
#include "fracsolve/mesh_fem.hpp"

#include <string>
#include <vector>

namespace fracsolve {

struct EigenMode {
  int n = 1;
  int m = 1;
  double lambda() const;
  double operator()(double x, double y) const;
  /// Values at interior nodes.
  Vector nodal(const CartesianMesh& mesh) const;
};

enum class CaseKind { Sine, MixedModes, SquareBump };

struct ManufacturedCase {
  CaseKind kind;
  std::string name;
  LoadFunction load() const;
};

/// Registered names: sine, mixed, bump.
ManufacturedCase case_from_name(const std::string& name);
std::vector<ManufacturedCase> all_cases();

/// Fourier coefficient of the indicator of [1/4, 3/4]^2 against
/// sin(n pi x) sin(m pi y) in the L2-normalized expansion.
double bump_coefficient(int n, int m);

/// Upper bound on the L2 norm of the bump series terms with n > terms or
/// m > terms.
double bump_tail_bound(double s, int terms);

class ExactSolution {
 public:
  ExactSolution(const ManufacturedCase& c, double s, int series_terms = 400);

  double operator()(double x, double y) const;
  /// values(i, j) = u(xs[i], ys[j]).
  DenseMatrix on_grid(const std::vector<double>& xs, const std::vector<double>& ys) const;
  /// Interior nodal interpolant.
  Vector nodal(const CartesianMesh& mesh) const;
  /// Bound on the truncation error in L2 (0 for closed forms).
  double tail_bound() const { return tail_; }
  const ManufacturedCase& problem() const { return case_; }
  double s() const { return s_; }

 private:
  ManufacturedCase case_;
  double s_;
  int terms_;
  double tail_ = 0;
  std::vector<int> modes_;  // odd wave numbers used by the bump series
  DenseMatrix coeff_;       // f_nm lambda_nm^{-s} over modes_ x modes_
};

enum class ErrorNorm {
  NodalMass,     // ||u_h - I_h u||_M
  ContinuousL2,  // ||u_h - u||_{L2}, 5x5 Gauss per cell
};
ErrorNorm error_norm_from_name(const std::string& name);
const char* error_norm_name(ErrorNorm norm);

double l2_error(const CartesianMesh& mesh, const SparseSymMatrix& mass, const Vector& numeric,
                const ExactSolution& exact, ErrorNorm norm);

}  // namespace fracsolve
