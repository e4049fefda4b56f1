#include "fracsolve/kato.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fracsolve {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOverflowExponent = 700.0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double beta0(double s) {
  const double x = kPi * s;
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
  return std::sin(x) / x;
}

void KatoConfig::validate() const {
  if (!(s >= kMinFractionalOrder && s <= 1.0 - kMinFractionalOrder)) {
    std::ostringstream msg;
    msg << "fractional order s=" << s << " outside [" << kMinFractionalOrder << ", " << 1 - kMinFractionalOrder << "]";
    throw UsageError(msg.str());
  }
  if (m_minus < 0 || m_plus < 0) throw UsageError("quadrature sizes must be non-negative");
  if (kind == QuadratureKind::GQ && (m_minus == 0) != (m_plus == 0))
    throw UsageError("give both M- and M+ or neither");
  if (automatic() && !(delta > 0)) throw UsageError("automatic point count needs delta > 0");
}

RulePair make_rules(int m_minus, int m_plus) { return {gauss_laguerre(m_minus), gauss_laguerre(m_plus)}; }

KatoSolver::KatoSolver(const SparseSymMatrix& s, const SparseSymMatrix& m, SolverConfig config)
    : shifted_(s, m, config) {}

Vector KatoSolver::solve_w_minus(double y, const Vector& f) const {
  if (!(y >= 0)) throw UsageError("solve_w_minus: y must be non-negative");
  return shifted_.solve(1.0, std::exp(-y), f);
}

Vector KatoSolver::solve_w_plus(double y, const Vector& f) const {
  if (!(y >= 0)) throw UsageError("solve_w_plus: y must be non-negative");
  return shifted_.solve(std::exp(-y), 1.0, f);
}

FractionalSolution KatoSolver::solve_gq(double s, const RulePair& rules, const Vector& f) const {
  KatoConfig{.s = s, .m_minus = rules.minus.size(), .m_plus = rules.plus.size()}.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int m_minus = rules.minus.size();
  const int count = m_minus + rules.plus.size();
  const double s_minus = 1.0 - s;
  const double s_plus = s;
  const double b_minus = beta0(s_minus);
  const double b_plus = beta0(s_plus);

  std::vector<Vector> terms(count);
  parallel_for(count, worker_count(), [&](std::size_t idx, unsigned) {
    const int j = int(idx);
    if (j < m_minus) {
      terms[j] = (b_minus * rules.minus.weights[j]) * solve_w_minus(rules.minus.nodes[j] / s_minus, f);
    } else {
      const int i = j - m_minus;
      terms[j] = (b_plus * rules.plus.weights[i]) * solve_w_plus(rules.plus.nodes[i] / s_plus, f);
    }
  });

  // Ascending node index, sigma = - before +: terms are summed per sigma
  // and the two partial sums are added last.
  Vector minus_sum = Vector::Zero(f.size());
  Vector plus_sum = Vector::Zero(f.size());
  for (int j = 0; j < m_minus; ++j) minus_sum += terms[j];
  for (int j = m_minus; j < count; ++j) plus_sum += terms[j];
  FractionalSolution out;
  out.coefficients = minus_sum + plus_sum;
  out.solve_count = count;
  out.seconds = seconds_since(t0);
  return out;
}

FractionalSolution KatoSolver::solve_sq(double s, const SincRule& rule, const Vector& f) const {
  if (!(s > 0 && s < 1)) throw UsageError("solve_sq: s must lie in (0, 1)");
  if (rule.m_minus < 0 || rule.m_plus < 0 || rule.m_minus + rule.m_plus == 0)
    throw UsageError("solve_sq: degenerate sinc rule (M- = M+ = 0)");
  if (!(rule.k > 0)) throw UsageError("solve_sq: step must be positive");
  for (int j : {-rule.m_minus, rule.m_plus}) {
    const double y = rule.node(j);
    if (std::abs(y) > kOverflowExponent) {
      std::ostringstream msg;
      msg << "sinc node y=" << y << " (j=" << j << ") overflows e^y; |y| must stay below " << kOverflowExponent;
      throw NumericalError(msg.str());
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  const int count = rule.size();
  const double scale = std::sin(kPi * s) / kPi * rule.k;
  std::vector<Vector> terms(count);
  parallel_for(count, worker_count(), [&](std::size_t idx, unsigned) {
    const double y = rule.node(int(idx) - rule.m_minus);
    terms[idx] = (scale * std::exp((1 - s) * y)) * shifted_.solve(1.0, std::exp(y), f);
  });
  Vector sum = Vector::Zero(f.size());
  for (const auto& t : terms) sum += t;
  FractionalSolution out;
  out.coefficients = std::move(sum);
  out.solve_count = count;
  out.seconds = seconds_since(t0);
  return out;
}

double stability_bound(double C2, double f_norm) { return 4.0 / kPi * std::max(1.0, C2) * f_norm; }

double scalar_kato(double t, double s, const RulePair& rules) {
  if (!(t > 0)) throw UsageError("scalar_kato: t must be positive");
  const double s_minus = 1.0 - s;
  const double s_plus = s;
  double minus = 0;
  for (int j = 0; j < rules.minus.size(); ++j)
    minus += rules.minus.weights[j] / (t + std::exp(-rules.minus.nodes[j] / s_minus));
  double plus = 0;
  for (int j = 0; j < rules.plus.size(); ++j)
    plus += rules.plus.weights[j] / (t * std::exp(-rules.plus.nodes[j] / s_plus) + 1.0);
  return beta0(s_minus) * minus + beta0(s_plus) * plus;
}

double scalar_sinc(double t, double s, const SincRule& rule) {
  double sum = 0;
  for (int j = -rule.m_minus; j <= rule.m_plus; ++j) {
    const double y = rule.node(j);
    sum += std::exp((1 - s) * y) / (t + std::exp(y));
  }
  return std::sin(kPi * s) / kPi * rule.k * sum;
}

void ErrorReport::write(std::ostream& out) const {
  out << std::setprecision(12);
  out << "method=" << method << '\n'
      << "s=" << s << '\n'
      << "level=" << level << '\n'
      << "M_minus=" << m_minus << '\n'
      << "M_plus=" << m_plus << '\n'
      << "solve_count=" << solve_count << '\n'
      << "load_norm=" << load_norm << '\n'
      << "C2=" << C2 << '\n'
      << "K2=" << K2 << '\n'
      << "lambda_min_M=" << lambda_min_M << '\n'
      << "solution_norm=" << solution_norm << '\n'
      << "stability_bound=" << stability_bound << '\n'
      << "G_minus=" << G_minus << '\n'
      << "G_plus=" << G_plus << '\n'
      << "quadrature_bound=" << quadrature_bound << '\n';
  if (rbm_certificate) out << "rbm_certificate=" << *rbm_certificate << '\n';
  if (error_vs_exact) out << "error_vs_exact=" << *error_vs_exact << '\n';
  out << "time_assembly=" << timing.assembly << '\n'
      << "time_factorization=" << timing.factorization << '\n'
      << "time_rules=" << timing.rules << '\n'
      << "time_solves=" << timing.solves << '\n'
      << "time_per_solve=" << timing.per_solve << '\n'
      << "time_total=" << timing.total << '\n';
}

void write_solution(std::ostream& out, int level, const Vector& u) {
  out << "# level=" << level << " dofs=" << u.size() << '\n' << std::setprecision(17);
  for (Index i = 0; i < u.size(); ++i) out << u[i] << '\n';
}

}  // namespace fracsolve
