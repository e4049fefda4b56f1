#pragma once

// Computable quadrature error of the partitioned Kato rule: g_M(a, b),
// G+-(M, s) over the spectral intervals, and the certified size M~(delta, s).

#include "fracsolve/common.hpp"
#include "fracsolve/linalg.hpp"
#include "fracsolve/quadrature.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace fracsolve {

/// I- = [K^2, C^2], I+ = [1/C^2, 1/K^2].
struct SpectralIntervals {
  double K2 = 0;
  double C2 = 0;

  static SpectralIntervals from_constants(double K2, double C2);
  static SpectralIntervals from_bounds(const SpectralBounds& b) { return from_constants(b.K2(), b.C2()); }
  /// Both intervals collapse to the single value t of a scalar problem.
  static SpectralIntervals singleton(double t) { return from_constants(1.0 / t, 1.0 / t); }

  double minus_lo() const { return K2; }
  double minus_hi() const { return C2; }
  double plus_lo() const { return 1.0 / C2; }
  double plus_hi() const { return 1.0 / K2; }
  double C2_tilde() const { return std::max(1.0, C2); }
};

/// Integral of e^{-y} / (1 + a e^{-b y}) over [0, inf), absolute accuracy
/// about 1e-13. Throws NumericalError if the adaptive rule does not settle.
double reference_integral(double a, double b);

/// |reference_integral(a, b) - sum tau_j / (1 + a e^{-b y_j})|.
double g_M(const GaussRule& rule, double a, double b);
double g_M(const GaussRule& rule, double a, double b, double reference);

/// Log-uniform grid with both endpoints; a single point if lo == hi.
std::vector<double> log_grid(double lo, double hi, int count);

struct GPair {
  double minus = 0;
  double plus = 0;
};

struct MTilde {
  int minus = 0;
  int plus = 0;
  int total() const { return minus + plus; }
  double G_minus = 0;  // G-(M~-, s)
  double G_plus = 0;
};

/// Holds the a-grids, reference integrals and Gauss rules so sweeps over
/// (M, s) reuse work. Thread-safe.
class QuadErrorEvaluator {
 public:
  explicit QuadErrorEvaluator(SpectralIntervals intervals, int a_grid_size = 200);

  const SpectralIntervals& intervals() const { return intervals_; }
  int a_grid_size() const { return grid_size_; }

  double G_minus(int m, double s);
  double G_plus(int m, double s);
  GPair G_pm(int m, double s) { return {G_minus(m, s), G_plus(m, s)}; }

  /// Smallest M with G(m, s) <= delta/2 for m = M..M+3, per side.
  /// Throws NumericalError if no such M <= cap exists.
  MTilde M_tilde(double delta, double s, int cap = 2000);

  std::shared_ptr<const GaussRule> rule(int m);

 private:
  enum class Side { Minus, Plus };
  double G(Side side, int m, double s);
  int search(Side side, double delta, double s, int cap, double& g_at);
  const std::vector<double>& references(Side side, double s);

  SpectralIntervals intervals_;
  int grid_size_;
  std::mutex mutex_;
  std::map<int, std::shared_ptr<const GaussRule>> rules_;
  std::map<std::pair<int, double>, std::shared_ptr<const std::vector<double>>> references_;
  std::map<std::tuple<int, int, double>, double> g_cache_;
};

/// Free-function forms.
GPair G_pm(int m, double s, const SpectralIntervals& intervals, int a_grid_size = 200);
MTilde M_tilde(double delta, double s, const SpectralIntervals& intervals, int cap = 2000);

/// C~^2 ||f|| (G-(M-, s) + G+(M+, s)).
double quadrature_error_bound(double g_minus, double g_plus, double C2_tilde, double f_norm);
double quadrature_error_bound(int m_minus, int m_plus, double s, QuadErrorEvaluator& evaluator, double f_norm);

struct ErrorSurfaceRow {
  int m;
  double s;
  double G_minus;
  double G_plus;
};
struct MTildeRow {
  double delta;
  double s;
  int m_minus;
  int m_plus;
};

/// CSV with a versioned header comment.
void write_error_surface(std::ostream& out, const std::vector<ErrorSurfaceRow>& rows, const SpectralIntervals& iv);
void write_mtilde_table(std::ostream& out, const std::vector<MTildeRow>& rows, const SpectralIntervals& iv);

}  // namespace fracsolve
