#pragma once

// Partitioned Kato integral: u(s) = sum over sigma of beta0(s_sigma) times
// the W-weighted integral of w_sigma(y / s_sigma), with
//   (S + e^{-y} M) w_-(y) = f   and   (e^{-y} S + M) w_+(y) = f.

#include "fracsolve/common.hpp"
#include "fracsolve/linalg.hpp"
#include "fracsolve/quadrature.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace fracsolve {

inline constexpr double kMinFractionalOrder = 1e-3;

/// sin(pi s) / (pi s), with the series near 0.
double beta0(double s);

enum class QuadratureKind { GQ, SQ };

struct KatoConfig {
  double s = 0.5;
  int m_minus = 0;  // 0 selects M~-(delta, s)
  int m_plus = 0;
  QuadratureKind kind = QuadratureKind::GQ;
  double delta = 1e-4;
  int m_tilde_cap = 2000;

  double s_minus() const { return 1.0 - s; }
  double s_plus() const { return s; }
  bool automatic() const { return m_minus == 0 || m_plus == 0; }
  /// Throws UsageError unless s lies in [1e-3, 1 - 1e-3] and sizes are sane.
  void validate() const;
};

struct RulePair {
  GaussRule minus;
  GaussRule plus;
};
RulePair make_rules(int m_minus, int m_plus);

struct Timing {
  double assembly = 0;
  double factorization = 0;  // spectral bounds, M-factorization
  double rules = 0;          // rule generation and M~ selection
  double solves = 0;
  double per_solve = 0;
  double total = 0;
};

struct ErrorReport {
  std::string method;
  double s = 0;
  int level = 0;
  int m_minus = 0;
  int m_plus = 0;
  int solve_count = 0;
  double load_norm = 0;  // ||f||_{M^{-1}}
  double C2 = 0;
  double K2 = 0;
  double lambda_min_M = 0;
  double solution_norm = 0;  // ||u||_M
  double stability_bound = 0;
  double G_minus = 0;
  double G_plus = 0;
  double quadrature_bound = 0;
  std::optional<double> rbm_certificate;
  std::optional<double> error_vs_exact;
  Timing timing;

  bool stable() const { return solution_norm <= stability_bound * (1 + 1e-12); }
  void write(std::ostream& out) const;
};

struct FractionalSolution {
  Vector coefficients;
  int solve_count = 0;
  double seconds = 0;
};

/// Truth solver for the Kato integrands. Immutable; safe for concurrent use.
class KatoSolver {
 public:
  KatoSolver(const SparseSymMatrix& s, const SparseSymMatrix& m, SolverConfig config = {});

  Vector solve_w_minus(double y, const Vector& f) const;
  Vector solve_w_plus(double y, const Vector& f) const;

  /// u = sum_sigma beta0(s_sigma) sum_j tau_{j,sigma} w_sigma(y_{j,sigma}/s_sigma),
  /// summed in ascending node order, sigma = - before +.
  FractionalSolution solve_gq(double s, const RulePair& rules, const Vector& f) const;
  /// u = beta(s) k sum_j e^{(1-s) j k} (S + e^{jk} M)^{-1} f, beta(s) = sin(pi s)/pi.
  FractionalSolution solve_sq(double s, const SincRule& rule, const Vector& f) const;

  const ShiftedSolver& shifted() const { return shifted_; }

 private:
  ShiftedSolver shifted_;
};

/// Stability bound (4/pi) max(1, C^2) ||f||.
double stability_bound(double C2, double f_norm);

/// Scalar analogues with t in place of the operator: approximate t^{-s}.
double scalar_kato(double t, double s, const RulePair& rules);
double scalar_sinc(double t, double s, const SincRule& rule);

/// Solution vector as text: header line with the mesh level and size, one
/// value per line.
void write_solution(std::ostream& out, int level, const Vector& u);

}  // namespace fracsolve
