#include "fracsolve/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fracsolve {
namespace {

// Values of the orthonormal Laguerre polynomials p_0..p_{m-1} at y, with a
// common power-of-two scale to avoid overflow. Returns log(sum p_k^2).
// Optionally also returns p_m and p_m' (same scale) for Newton steps.
struct OrthoEval {
  double log_sum_squares;
  double p_m;
  double dp_m;
};

OrthoEval evaluate_orthonormal(double y, int m) {
  double p_prev = 0.0;
  double p = 1.0;
  double dp_prev = 0.0;
  double dp = 0.0;
  double sum = 1.0;
  double log_scale = 0.0;
  for (int k = 0; k < m; ++k) {
    // (k+1) p_{k+1} = (y - (2k+1)) p_k - k p_{k-1}
    const double p_next = ((y - (2 * k + 1)) * p - k * p_prev) / (k + 1);
    const double dp_next = ((y - (2 * k + 1)) * dp + p - k * dp_prev) / (k + 1);
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
    if (k + 1 < m) sum += p * p;
    const double mag = std::max(std::abs(p), std::abs(dp));
    if (mag > 1e150) {
      constexpr double shrink = 1e-150;
      p *= shrink;
      p_prev *= shrink;
      dp *= shrink;
      dp_prev *= shrink;
      sum *= shrink * shrink;
      log_scale += 2 * 150 * std::log(10.0);
    }
  }
  return {std::log(sum) + log_scale, p, dp};
}

}  // namespace

Recurrence laguerre_recurrence(int n) {
  if (n < 0) throw UsageError("laguerre_recurrence: negative index");
  if (n == 0) return {0.0, 1.0};
  return {2.0 * n - 1.0, double(n)};
}

DenseMatrix jacobi_matrix(int m) {
  if (m < 1) throw UsageError("jacobi_matrix: size must be positive");
  DenseMatrix j = DenseMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    j(i, i) = laguerre_recurrence(i + 1).a;
    if (i + 1 < m) j(i, i + 1) = j(i + 1, i) = laguerre_recurrence(i + 1).b;
  }
  return j;
}

std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e,
                                            std::vector<double>* first_components) {
  const int n = int(d.size());
  if (n == 0) return {};
  if (int(e.size()) != n - 1) throw UsageError("tridiagonal_eigenvalues: off-diagonal must have n-1 entries");
  e.push_back(0.0);
  // Only the first row of the eigenvector matrix is tracked.
  std::vector<double> z;
  if (first_components) {
    z.assign(n, 0.0);
    z[0] = 1.0;
  }
  constexpr int kMaxSweeps = 60;
  for (int l = 0; l < n; ++l) {
    int iterations = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (++iterations > kMaxSweeps)
          throw NumericalError("tridiagonal QL did not converge for eigenvalue " + std::to_string(l));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (first_components) {
            f = z[i + 1];
            z[i + 1] = s * z[i] + c * f;
            z[i] = c * z[i] - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  std::vector<double> sorted(n);
  for (int i = 0; i < n; ++i) sorted[i] = d[order[i]];
  if (first_components) {
    first_components->resize(n);
    for (int i = 0; i < n; ++i) (*first_components)[i] = z[order[i]];
  }
  return sorted;
}

GaussRule gauss_laguerre(int m, WeightMethod method) {
  if (m < 1 || m > kMaxGaussLaguerreSize)
    throw UsageError("gauss_laguerre: size " + std::to_string(m) + " outside [1, " +
                     std::to_string(kMaxGaussLaguerreSize) + "]");
  std::vector<double> diag(m);
  std::vector<double> off(m - 1);
  for (int i = 0; i < m; ++i) {
    diag[i] = laguerre_recurrence(i + 1).a;
    if (i + 1 < m) off[i] = laguerre_recurrence(i + 1).b;
  }
  std::vector<double> first;
  GaussRule rule;
  rule.nodes = tridiagonal_eigenvalues(diag, off, method == WeightMethod::EigenVector ? &first : nullptr);
  rule.weights.resize(m);
  const double b0_squared = laguerre_recurrence(0).b * laguerre_recurrence(0).b;

  for (int j = 0; j < m; ++j) {
    double y = rule.nodes[j];
    if (method == WeightMethod::Recurrence) {
      // One guarded Newton step on p_M sharpens small nodes, whose QL
      // eigenvalues carry only absolute accuracy.
      const OrthoEval ev = evaluate_orthonormal(y, m);
      if (ev.dp_m != 0) {
        const double step = ev.p_m / ev.dp_m;
        if (std::isfinite(step) && std::abs(step) <= 1e-8 * std::max(1.0, y) && y - step > 0) y -= step;
      }
      rule.nodes[j] = y;
      rule.weights[j] = b0_squared * std::exp(-evaluate_orthonormal(y, m).log_sum_squares);
    } else {
      rule.weights[j] = b0_squared * first[j] * first[j];
    }
  }
  for (int j = 0; j < m; ++j)
    if (!(rule.nodes[j] > 0) || (j > 0 && !(rule.nodes[j] > rule.nodes[j - 1])))
      throw NumericalError("gauss_laguerre: nodes not positive and strictly ascending at size " + std::to_string(m));
  return rule;
}

SincRule sinc_rule(double s, double truth_dim) {
  if (!(s > 0 && s < 1)) throw UsageError("sinc_rule: s must lie in (0, 1)");
  if (!(truth_dim >= 4)) throw UsageError("sinc_rule: truth dimension must be at least 4");
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  SincRule rule;
  rule.k = 1.0 / std::log(std::sqrt(truth_dim));
  rule.m_plus = int(std::ceil(pi2 / (4 * s * rule.k * rule.k)));
  rule.m_minus = int(std::ceil(pi2 / (4 * (1 - s) * rule.k * rule.k)));
  return rule;
}

SincRule sinc_rule_from_count(double s, int m_plus) {
  if (!(s > 0 && s < 1)) throw UsageError("sinc_rule: s must lie in (0, 1)");
  if (m_plus < 1) throw UsageError("sinc_rule: M+ must be positive");
  SincRule rule;
  rule.k = std::numbers::pi / (2 * std::sqrt(s * m_plus));
  rule.m_plus = m_plus;
  rule.m_minus = std::max(1, int(std::lround(s * m_plus / (1 - s))));
  return rule;
}

double apply_rule(const GaussRule& rule, const std::function<double(double)>& g) {
  double sum = 0;
  for (int j = 0; j < rule.size(); ++j) {
    const double v = g(rule.nodes[j]);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "apply_rule: non-finite value at node " << j << " (y = " << rule.nodes[j] << ")";
      throw NumericalError(msg.str());
    }
    sum += rule.weights[j] * v;
  }
  return sum;
}

void write_rule(std::ostream& out, const GaussRule& rule) {
  out << std::setprecision(17);
  for (int j = 0; j < rule.size(); ++j) out << rule.nodes[j] << ' ' << rule.weights[j] << '\n';
}

}  // namespace fracsolve
