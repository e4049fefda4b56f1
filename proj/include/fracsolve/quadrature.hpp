#pragma once

// Gauss-Laguerre rules for W(y) = e^{-y} on [0, inf) and the sinc baseline.

#include "fracsolve/common.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace fracsolve {

struct GaussRule {
  std::vector<double> nodes;    // ascending, positive
  std::vector<double> weights;  // positive (may underflow to 0 far out)
  int size() const { return int(nodes.size()); }
};

/// Coefficients of the monic three-term recurrence for the Laguerre weight:
/// b_0 = 1, and for n >= 1, a_n = 2n - 1, b_n = n. The value a is 0 at n = 0.
struct Recurrence {
  double a;
  double b;
};
Recurrence laguerre_recurrence(int n);

/// Symmetric tridiagonal Jacobi matrix J_M (dense, for inspection).
DenseMatrix jacobi_matrix(int m);

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, by implicit-shift QL. If first_components is
/// non-null, it receives the first component of each unit eigenvector (in
/// the same order).
std::vector<double> tridiagonal_eigenvalues(std::vector<double> diag, std::vector<double> offdiag,
                                            std::vector<double>* first_components = nullptr);

enum class WeightMethod {
  Recurrence,    // closed-form eigenvector via orthonormal polynomial values
  EigenVector,   // squared first components accumulated during QL
};

inline constexpr int kMaxGaussLaguerreSize = 16384;

GaussRule gauss_laguerre(int m, WeightMethod method = WeightMethod::Recurrence);

/// Equal-step sinc rule on the real line: nodes j*k for j = -m_minus..m_plus,
/// every weight k.
struct SincRule {
  double k = 0;
  int m_minus = 0;
  int m_plus = 0;
  int size() const { return m_minus + m_plus + 1; }
  double node(int j) const { return j * k; }
};

/// Point counts from the truth dimension: k = 1/log(sqrt N),
/// M+ = ceil(pi^2 / (4 s k^2)), M- = ceil(pi^2 / (4 (1 - s) k^2)).
SincRule sinc_rule(double s, double truth_dim);
/// Same balance relation, but with M+ prescribed: k = pi / (2 sqrt(s M+)).
SincRule sinc_rule_from_count(double s, int m_plus);

/// Sum of tau_j g(y_j). Throws NumericalError naming the node if g is not
/// finite there.
double apply_rule(const GaussRule& rule, const std::function<double(double)>& g);

/// Two columns: node weight, 17 significant digits.
void write_rule(std::ostream& out, const GaussRule& rule);

}  // namespace fracsolve
