#include "fracsolve/quaderror.hpp"

#include "fracsolve/kato.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace fracsolve {

SpectralIntervals SpectralIntervals::from_constants(double K2, double C2) {
  if (!(K2 > 0) || !(C2 >= K2) || !std::isfinite(C2))
    throw UsageError("spectral intervals need 0 < K^2 <= C^2 < inf");
  return {K2, C2};
}

namespace {

using Kronrod31 = boost::math::quadrature::gauss_kronrod<double, 31>;
using Kronrod61 = boost::math::quadrature::gauss_kronrod<double, 61>;

// Bisect until the 31- and 61-point Kronrod values agree to roundoff; the
// disagreements are summed into error.
template <class F>
double kronrod_panel(const F& f, double lo, double hi, int depth, double& error) {
  const double k31 = Kronrod31::integrate(f, lo, hi, 0, 0.0);
  const double k61 = Kronrod61::integrate(f, lo, hi, 0, 0.0);
  const double diff = std::abs(k61 - k31);
  if (diff <= 1e-16 + 4e-16 * std::abs(k61) || depth == 0) {
    error += diff;
    return k61;
  }
  const double mid = 0.5 * (lo + hi);
  return kronrod_panel(f, lo, mid, depth - 1, error) + kronrod_panel(f, mid, hi, depth - 1, error);
}

}  // namespace

double reference_integral(double a, double b) {
  if (!(a >= 0) || !(b > 1)) throw UsageError("reference_integral: need a >= 0 and b > 1");
  if (a == 0) return 1.0;
  auto f = [a, b](double y) { return std::exp(-y) / (1.0 + a * std::exp(-b * y)); };
  // The integrand switches from e^{(b-1)y}/a to e^{-y} around y* = ln(a)/b
  // over a layer of width ~1/b.
  const double y_star = std::log(a) / b;
  const double y_end = std::max(40.0, y_star + 40.0);
  std::vector<double> cuts{0.0};
  for (double c : {y_star - 10.0 / b, y_star - 1.0 / b, y_star, y_star + 1.0 / b, y_star + 10.0 / b})
    if (c > cuts.back() + 1e-12 && c < y_end) cuts.push_back(c);
  cuts.push_back(y_end);

  double total = 0;
  double error = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += kronrod_panel(f, cuts[i], cuts[i + 1], 30, error);
  // Tail beyond y_end: integrand lies between e^{-y}/(1+a e^{-b y_end}) and e^{-y}.
  total += std::exp(-y_end) / (1.0 + a * std::exp(-b * y_end));
  if (!(error <= 1e-13)) {
    std::ostringstream msg;
    msg << "reference_integral(a=" << a << ", b=" << b << ") did not settle: Kronrod disagreement " << error;
    throw NumericalError(msg.str());
  }
  return total;
}

double g_M(const GaussRule& rule, double a, double b, double reference) {
  double sum = 0;
  for (int j = 0; j < rule.size(); ++j) sum += rule.weights[j] / (1.0 + a * std::exp(-b * rule.nodes[j]));
  return std::abs(reference - sum);
}

double g_M(const GaussRule& rule, double a, double b) { return g_M(rule, a, b, reference_integral(a, b)); }

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0) || !(hi >= lo) || count < 1) throw UsageError("log_grid: need 0 < lo <= hi and count >= 1");
  if (lo == hi || count == 1) return {lo};
  std::vector<double> grid(count);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(llo + (lhi - llo) * i / (count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

QuadErrorEvaluator::QuadErrorEvaluator(SpectralIntervals intervals, int a_grid_size)
    : intervals_(intervals), grid_size_(a_grid_size) {
  if (a_grid_size < 1) throw UsageError("a-grid size must be positive");
}

std::shared_ptr<const GaussRule> QuadErrorEvaluator::rule(int m) {
  {
    std::lock_guard lock(mutex_);
    auto it = rules_.find(m);
    if (it != rules_.end()) return it->second;
  }
  auto built = std::make_shared<const GaussRule>(gauss_laguerre(m));
  std::lock_guard lock(mutex_);
  return rules_.emplace(m, std::move(built)).first->second;
}

const std::vector<double>& QuadErrorEvaluator::references(Side side, double s) {
  const std::pair<int, double> key{int(side), s};
  {
    std::lock_guard lock(mutex_);
    auto it = references_.find(key);
    if (it != references_.end()) return *it->second;
  }
  const double s_sigma = side == Side::Minus ? 1.0 - s : s;
  const double b = 1.0 / s_sigma;
  const auto grid = side == Side::Minus ? log_grid(intervals_.minus_lo(), intervals_.minus_hi(), grid_size_)
                                        : log_grid(intervals_.plus_lo(), intervals_.plus_hi(), grid_size_);
  auto values = std::make_shared<std::vector<double>>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) (*values)[i] = reference_integral(grid[i], b);
  std::lock_guard lock(mutex_);
  return *references_.emplace(key, std::move(values)).first->second;
}

double QuadErrorEvaluator::G(Side side, int m, double s) {
  if (!(s > 0 && s < 1)) throw UsageError("G: s must lie in (0, 1)");
  if (m < 1) throw UsageError("G: M must be positive");
  const std::tuple<int, int, double> key{int(side), m, s};
  {
    std::lock_guard lock(mutex_);
    auto it = g_cache_.find(key);
    if (it != g_cache_.end()) return it->second;
  }
  const double s_sigma = side == Side::Minus ? 1.0 - s : s;
  const double b = 1.0 / s_sigma;
  const auto grid = side == Side::Minus ? log_grid(intervals_.minus_lo(), intervals_.minus_hi(), grid_size_)
                                        : log_grid(intervals_.plus_lo(), intervals_.plus_hi(), grid_size_);
  const auto& refs = references(side, s);
  const auto r = rule(m);
  double worst = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, g_M(*r, grid[i], b, refs[i]));
  const double value = beta0(s_sigma) * worst;
  std::lock_guard lock(mutex_);
  g_cache_[key] = value;
  return value;
}

double QuadErrorEvaluator::G_minus(int m, double s) { return G(Side::Minus, m, s); }
double QuadErrorEvaluator::G_plus(int m, double s) { return G(Side::Plus, m, s); }

int QuadErrorEvaluator::search(Side side, double delta, double s, int cap, double& g_at) {
  const double target = delta / 2;
  auto ok = [&](int m) {
    for (int k = 0; k < 4; ++k)
      if (G(side, m + k, s) > target) return false;
    return true;
  };
  constexpr int kLinearLimit = 64;
  double best = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= std::min(cap, kLinearLimit); ++m) {
    if (ok(m)) {
      g_at = G(side, m, s);
      return m;
    }
    best = std::min(best, G(side, m, s));
  }
  // Bracket by doubling, then bisect on the four-consecutive predicate.
  int lo = kLinearLimit;
  int hi = 0;
  for (int m = 2 * kLinearLimit; hi == 0; m *= 2) {
    const int probe = std::min(m, cap);
    if (ok(probe)) {
      hi = probe;
      break;
    }
    best = std::min(best, G(side, probe, s));
    if (probe == cap) {
      std::ostringstream msg;
      msg << "M_tilde: cap " << cap << " exceeded for delta=" << delta << ", s=" << s << " (best G=" << best << ")";
      throw NumericalError(msg.str());
    }
    lo = probe;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  // The predicate is not guaranteed monotone; walk down while it still holds.
  for (int step = 0; step < 8 && hi > 1 && ok(hi - 1); ++step) --hi;
  g_at = G(side, hi, s);
  return hi;
}

MTilde QuadErrorEvaluator::M_tilde(double delta, double s, int cap) {
  if (!(delta > 0)) throw UsageError("M_tilde: delta must be positive");
  if (!(s > 0 && s < 1)) throw UsageError("M_tilde: s must lie in (0, 1)");
  if (cap + 3 > kMaxGaussLaguerreSize) throw UsageError("M_tilde: cap exceeds the largest supported rule");
  MTilde out;
  out.minus = search(Side::Minus, delta, s, cap, out.G_minus);
  out.plus = search(Side::Plus, delta, s, cap, out.G_plus);
  return out;
}

GPair G_pm(int m, double s, const SpectralIntervals& intervals, int a_grid_size) {
  QuadErrorEvaluator ev(intervals, a_grid_size);
  return ev.G_pm(m, s);
}

MTilde M_tilde(double delta, double s, const SpectralIntervals& intervals, int cap) {
  QuadErrorEvaluator ev(intervals);
  return ev.M_tilde(delta, s, cap);
}

double quadrature_error_bound(double g_minus, double g_plus, double C2_tilde, double f_norm) {
  return C2_tilde * f_norm * (g_minus + g_plus);
}

double quadrature_error_bound(int m_minus, int m_plus, double s, QuadErrorEvaluator& evaluator, double f_norm) {
  return quadrature_error_bound(evaluator.G_minus(m_minus, s), evaluator.G_plus(m_plus, s),
                                evaluator.intervals().C2_tilde(), f_norm);
}

namespace {
void interval_comment(std::ostream& out, const SpectralIntervals& iv) {
  out << "# C2=" << iv.C2 << " K2=" << iv.K2 << '\n';
}
}  // namespace

void write_error_surface(std::ostream& out, const std::vector<ErrorSurfaceRow>& rows, const SpectralIntervals& iv) {
  out << "# fracsolve gsurface v1\n";
  interval_comment(out, iv);
  out << "M,s,G_minus,G_plus\n" << std::setprecision(10);
  for (const auto& r : rows) out << r.m << ',' << r.s << ',' << r.G_minus << ',' << r.G_plus << '\n';
}

void write_mtilde_table(std::ostream& out, const std::vector<MTildeRow>& rows, const SpectralIntervals& iv) {
  out << "# fracsolve mtilde v1\n";
  interval_comment(out, iv);
  out << "delta,s,M_minus,M_plus\n" << std::setprecision(10);
  for (const auto& r : rows) out << r.delta << ',' << r.s << ',' << r.m_minus << ',' << r.m_plus << '\n';
}

}  // namespace fracsolve
