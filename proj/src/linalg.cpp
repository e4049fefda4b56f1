#include "fracsolve/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>

#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

namespace fracsolve {
namespace {

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using LdltNatural = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>;
using Cg = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>;
using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

// Index (in the original numbering) of the first non-positive pivot, or -1.
template <class Solver>
Index first_bad_pivot(const Solver& solver) {
  const Vector& d = solver.vectorD();
  for (Index k = 0; k < d.size(); ++k)
    if (!(d[k] > 0)) return solver.permutationPinv().size() ? solver.permutationPinv().indices()[k] : k;
  return -1;
}

[[noreturn]] void throw_not_spd(Index index) {
  throw NumericalError("matrix is not SPD: non-positive pivot at row " + std::to_string(index));
}

// Solve with residual check and iterative refinement.
template <class SolveFn>
Vector refined_solve(const SparseMatrix& a, const Vector& b, const SolverConfig& config, SolveFn&& raw_solve) {
  const double bnorm = b.norm();
  if (bnorm == 0) return Vector::Zero(b.size());
  Vector x = raw_solve(b);
  Vector r = b - a * x;
  double rel = r.norm() / bnorm;
  for (int step = 0; step < config.max_refinement_steps && rel > config.residual_tol; ++step) {
    x += raw_solve(r);
    r = b - a * x;
    rel = r.norm() / bnorm;
  }
  if (!std::isfinite(rel) || rel > config.residual_tol) {
    std::ostringstream msg;
    msg << "linear solve residual " << rel << " exceeds tolerance " << config.residual_tol;
    throw NumericalError(msg.str());
  }
  return x;
}

}  // namespace

struct SpdFactorization::Impl {
  SparseMatrix a;
  SolverConfig config;
  std::unique_ptr<Ldlt> ldlt;
  std::unique_ptr<Cg> cg;
  mutable std::mutex cg_mutex;  // Eigen's CG records iteration stats in solve()
};

SpdFactorization::SpdFactorization(const SparseMatrix& a, const SolverConfig& config) : impl_(new Impl) {
  if (a.rows() != a.cols()) throw UsageError("factorize: matrix is not square");
  impl_->a = a;
  impl_->config = config;
  if (a.rows() <= config.direct_max_dofs) {
    impl_->ldlt = std::make_unique<Ldlt>();
    impl_->ldlt->compute(impl_->a);
    const Index bad = first_bad_pivot(*impl_->ldlt);
    if (impl_->ldlt->info() != Eigen::Success || bad >= 0) throw_not_spd(bad < 0 ? 0 : bad);
  } else {
    impl_->cg = std::make_unique<Cg>();
    impl_->cg->setTolerance(config.cg_tol);
    impl_->cg->setMaxIterations(config.cg_max_iterations);
    impl_->cg->compute(impl_->a);
    if (impl_->cg->info() != Eigen::Success)
      throw NumericalError("incomplete Cholesky preconditioner failed; matrix may not be SPD");
  }
}

SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

Index SpdFactorization::dimension() const { return impl_->a.rows(); }
bool SpdFactorization::is_direct() const { return impl_->ldlt != nullptr; }

Vector SpdFactorization::solve(const Vector& b) const {
  if (b.size() != dimension()) throw UsageError("solve: right-hand side has wrong dimension");
  if (impl_->ldlt) return refined_solve(impl_->a, b, impl_->config, [&](const Vector& r) -> Vector { return impl_->ldlt->solve(r); });
  std::lock_guard lock(impl_->cg_mutex);
  return refined_solve(impl_->a, b, impl_->config, [&](const Vector& r) -> Vector { return impl_->cg->solve(r); });
}

struct ShiftedSolver::Impl {
  SolverConfig config;
  Permutation perm;  // P: permuted = P * original
  SparseMatrix s_perm;
  SparseMatrix m_perm;
  SparseMatrix s_orig;
  SparseMatrix m_orig;
};

ShiftedSolver::ShiftedSolver(const SparseSymMatrix& s, const SparseSymMatrix& m, SolverConfig config)
    : impl_(new Impl) {
  if (!s.same_pattern(m)) throw UsageError("shifted solver: S and M must share one sparsity pattern");
  impl_->config = config;
  impl_->s_orig = s.matrix();
  impl_->m_orig = m.matrix();
  if (s.dimension() <= config.direct_max_dofs) {
    Permutation pinv;
    Eigen::AMDOrdering<int> amd;
    amd(impl_->s_orig, pinv);
    impl_->perm = pinv.inverse();
    impl_->s_perm = impl_->perm * impl_->s_orig * impl_->perm.transpose();
    impl_->m_perm = impl_->perm * impl_->m_orig * impl_->perm.transpose();
    impl_->s_perm.makeCompressed();
    impl_->m_perm.makeCompressed();
    if (impl_->s_perm.nonZeros() != impl_->m_perm.nonZeros())
      throw NumericalError("shifted solver: permuted patterns differ");
  }
}

ShiftedSolver::~ShiftedSolver() = default;
ShiftedSolver::ShiftedSolver(ShiftedSolver&&) noexcept = default;

const SolverConfig& ShiftedSolver::config() const { return impl_->config; }
Index ShiftedSolver::dimension() const { return impl_->s_orig.rows(); }

SparseMatrix ShiftedSolver::combination(double alpha, double beta) const {
  SparseMatrix a = impl_->s_orig;
  const double* sv = impl_->s_orig.valuePtr();
  const double* mv = impl_->m_orig.valuePtr();
  double* av = a.valuePtr();
  for (Index k = 0; k < a.nonZeros(); ++k) av[k] = alpha * sv[k] + beta * mv[k];
  return a;
}

Vector ShiftedSolver::solve(double alpha, double beta, const Vector& f) const {
  if (!(alpha >= 0) || !(beta >= 0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw UsageError("solve_shifted: alpha and beta must be finite and non-negative");
  if (alpha == 0 && beta == 0) throw UsageError("solve_shifted: alpha = beta = 0");
  if (f.size() != dimension()) throw UsageError("solve_shifted: load has wrong dimension");
  if (impl_->s_perm.size() == 0) {
    SpdFactorization fac(combination(alpha, beta), impl_->config);
    return fac.solve(f);
  }
  SparseMatrix a = impl_->s_perm;
  const double* sv = impl_->s_perm.valuePtr();
  const double* mv = impl_->m_perm.valuePtr();
  double* av = a.valuePtr();
  for (Index k = 0; k < a.nonZeros(); ++k) av[k] = alpha * sv[k] + beta * mv[k];
  LdltNatural ldlt;
  ldlt.analyzePattern(a);
  ldlt.factorize(a);
  const Index bad = first_bad_pivot(ldlt);
  if (ldlt.info() != Eigen::Success || bad >= 0) throw_not_spd(bad < 0 ? 0 : Permutation(impl_->perm.inverse()).indices()[bad]);
  const Vector fp = impl_->perm * f;
  const Vector xp = refined_solve(a, fp, impl_->config, [&](const Vector& r) -> Vector { return ldlt.solve(r); });
  return impl_->perm.transpose() * xp;
}

Vector solve_shifted(const SparseSymMatrix& s, const SparseSymMatrix& m, double alpha, double beta, const Vector& f,
                     const SolverConfig& config) {
  return ShiftedSolver(s, m, config).solve(alpha, beta, f);
}

PencilEig largest_pencil_eig(const std::function<Vector(const Vector&)>& apply_a,
                             const std::function<Vector(const Vector&)>& solve_b,
                             const std::function<Vector(const Vector&)>& apply_b, Index n, double rel_tol,
                             int max_iterations, std::uint64_t seed) {
  const int cap = int(std::min<Index>(max_iterations, n));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);

  DenseMatrix basis(n, cap);
  DenseMatrix b_basis(n, cap);
  std::vector<double> alphas;
  std::vector<double> betas;

  Vector bv = apply_b(v);
  double nrm = std::sqrt(v.dot(bv));
  basis.col(0) = v / nrm;
  b_basis.col(0) = bv / nrm;

  PencilEig best;
  auto ritz = [&](int m, bool final) {
    Vector diag = Eigen::Map<Vector>(alphas.data(), m);
    Vector sub = m > 1 ? Vector(Eigen::Map<Vector>(betas.data(), m - 1)) : Vector(0);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double theta = eig.eigenvalues()[m - 1];
    const double beta_next = betas.size() >= std::size_t(m) ? betas[m - 1] : 0.0;
    best.value = theta;
    best.residual = std::abs(beta_next * eig.eigenvectors()(m - 1, m - 1));
    best.iterations = m;
    if (final) best.vector = basis.leftCols(m) * eig.eigenvectors().col(m - 1);
  };

  for (int j = 0; j < cap; ++j) {
    const Vector av = apply_a(basis.col(j));
    alphas.push_back(basis.col(j).dot(av));
    Vector w = solve_b(av);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector coeff = b_basis.leftCols(j + 1).transpose() * w;
      w -= basis.leftCols(j + 1) * coeff;
    }
    const Vector bw = apply_b(w);
    const double beta = std::sqrt(std::max(0.0, w.dot(bw)));
    betas.push_back(beta);
    const int m = j + 1;
    const bool check = m <= 40 || m % 5 == 0 || m == cap;
    if (check || beta == 0) {
      ritz(m, false);
      if (best.residual <= rel_tol * std::abs(best.value) || beta <= 1e-300 || m == cap) {
        ritz(m, true);
        if (best.residual <= rel_tol * std::abs(best.value) || beta <= 1e-300) return best;
        break;
      }
    }
    basis.col(j + 1) = w / beta;
    b_basis.col(j + 1) = bw / beta;
  }
  std::ostringstream msg;
  msg << "Lanczos did not converge after " << best.iterations << " iterations: estimate " << best.value
      << ", residual " << best.residual;
  throw NumericalError(msg.str());
}

SpectralBounds extremal_generalized_eigs(const SparseSymMatrix& s, const SparseSymMatrix& m,
                                         const SolverConfig& config) {
  if (s.dimension() != m.dimension()) throw UsageError("extremal_generalized_eigs: dimension mismatch");
  const Index n = s.dimension();
  SpdFactorization s_fac(s, config);
  SpdFactorization m_fac(m, config);
  auto mul_s = [&](const Vector& v) -> Vector { return s * v; };
  auto mul_m = [&](const Vector& v) -> Vector { return m * v; };
  auto inv_s = [&](const Vector& v) -> Vector { return s_fac.solve(v); };
  auto inv_m = [&](const Vector& v) -> Vector { return m_fac.solve(v); };
  auto identity = [](const Vector& v) -> Vector { return v; };

  SpectralBounds bounds;
  // lambda_min(S,M) = 1 / lambda_max(M,S)
  const PencilEig low = largest_pencil_eig(mul_m, inv_s, mul_s, n, config.eig_min_rel_tol,
                                           config.eig_max_iterations, config.seed);
  bounds.lambda_min_SM = 1.0 / low.value;
  bounds.eigvec_min_SM = low.vector;
  bounds.iterations_min = low.iterations;

  const PencilEig high = largest_pencil_eig(mul_s, inv_m, mul_m, n, config.eig_max_rel_tol,
                                            config.eig_max_iterations, config.seed + 1);
  bounds.lambda_max_SM = high.value;
  bounds.eigvec_max_SM = high.vector;
  bounds.iterations_max = high.iterations;

  const PencilEig mass = largest_pencil_eig(identity, inv_m, mul_m, n, config.eig_mass_rel_tol,
                                            config.eig_max_iterations, config.seed + 2);
  bounds.lambda_min_M = 1.0 / mass.value;
  bounds.iterations_mass = mass.iterations;
  return bounds;
}

double inverse_mass_norm(const SpdFactorization& mass, const Vector& f) {
  return std::sqrt(std::max(0.0, f.dot(mass.solve(f))));
}

double mass_norm(const SparseSymMatrix& m, const Vector& v) { return std::sqrt(std::max(0.0, m.quadratic_form(v))); }

}  // namespace fracsolve
