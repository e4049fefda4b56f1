#include "fracsolve/rbm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>

namespace fracsolve {
namespace {

constexpr double kMaxReducedCondition = 1e14;

Vector theta_of(const RbmModel& model, double z, const Vector& c) {
  const Index n = c.size();
  Vector theta(2 * n);
  const bool minus = model.sigma == Sigma::Minus;
  for (Index k = 0; k < n; ++k) {
    theta[2 * k] = minus ? c[k] : z * c[k];
    theta[2 * k + 1] = minus ? z * c[k] : c[k];
  }
  return theta;
}

// Working state of the greedy: the truth-size Euclidean basis Q and the
// unexplained part of f, both dropped once training ends.
struct ResidualBuilder {
  DenseMatrix Q;
  Vector f_perp;
  std::vector<Vector> columns;  // S u_1, M u_1, ...

  void add_column(const Vector& v, RbmModel& model) {
    Vector rem = v;
    for (int pass = 0; pass < 2; ++pass) rem -= Q * (Q.transpose() * rem);
    const double vn = v.norm();
    const double rn = rem.norm();
    if (vn > 0 && rn > 1e-13 * vn) {
      const Vector q = rem / rn;
      Q.conservativeResize(v.size(), Q.cols() + 1);
      Q.col(Q.cols() - 1) = q;
      const double proj = q.dot(f_perp);
      f_perp -= proj * q;
      model.qf.conservativeResize(model.qf.size() + 1);
      model.qf[model.qf.size() - 1] = q.dot(model_f_);
      // Old columns lie in the old span, so their new T row is zero.
      model.T.conservativeResize(Q.cols(), model.T.cols());
      model.T.row(Q.cols() - 1).setZero();
    }
    columns.push_back(v);
    model.T.conservativeResize(Q.cols(), model.T.cols() + 1);
    model.T.col(model.T.cols() - 1) = Q.transpose() * v;
    model.f_perp_norm = f_perp.norm();
  }
  Vector model_f_;
};

void refresh_spectra(RbmModel& model) {
  if (model.dimension() == 0) return;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eb(model.B, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> ec(model.C, Eigen::EigenvaluesOnly);
  model.B_eig_min = eb.eigenvalues().minCoeff();
  model.B_eig_max = eb.eigenvalues().maxCoeff();
  model.C_eig_min = ec.eigenvalues().minCoeff();
  model.C_eig_max = ec.eigenvalues().maxCoeff();
}

// Adds probe points whose estimator exceeds tol to the grid, keeping it
// sorted. Returns whether anything was added.
bool refine(std::vector<double>& grid, const RbmModel& model, double tol, std::vector<char>& skipped) {
  std::vector<double> probes = {0.0};
  for (int k = 1; k <= 16; ++k) probes.push_back(grid.front() * std::ldexp(1.0, -k));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) probes.push_back(0.5 * (grid[i] + grid[i + 1]));
  std::vector<double> added;
  for (double z : probes)
    if (std::find(grid.begin(), grid.end(), z) == grid.end() && reduced_solve_z(model, z).delta > tol)
      added.push_back(z);
  if (added.empty()) return false;
  std::vector<std::pair<double, char>> merged;
  for (std::size_t i = 0; i < grid.size(); ++i) merged.emplace_back(grid[i], skipped[i]);
  for (double z : added) merged.emplace_back(z, 0);
  std::sort(merged.begin(), merged.end());
  grid.clear();
  skipped.clear();
  for (const auto& [z, flag] : merged) {
    grid.push_back(z);
    skipped.push_back(flag);
  }
  return true;
}

}  // namespace

const char* sigma_name(Sigma sigma) { return sigma == Sigma::Minus ? "minus" : "plus"; }

std::vector<double> training_grid(int size) {
  if (size < 1) throw UsageError("training grid size must be positive");
  std::vector<double> z(size);
  for (int i = 0; i < size; ++i) z[i] = double(i + 1) / size;
  return z;
}

ReducedSolution reduced_solve_z(const RbmModel& model, double z) {
  if (!(z >= 0 && z <= 1)) throw UsageError("reduced_solve: z = e^{-y} must lie in [0, 1]");
  ReducedSolution out;
  out.z = z;
  const Index n = model.dimension();
  if (n > 0) {
    const bool minus = model.sigma == Sigma::Minus;
    const double lo = minus ? model.B_eig_min + z * model.C_eig_min : z * model.B_eig_min + model.C_eig_min;
    const double hi = minus ? model.B_eig_max + z * model.C_eig_max : z * model.B_eig_max + model.C_eig_max;
    if (!(lo > 0) || hi / lo > kMaxReducedCondition) {
      std::ostringstream msg;
      msg << "reduced matrix condition estimate " << hi / lo << " exceeds " << kMaxReducedCondition;
      throw NumericalError(msg.str());
    }
    const DenseMatrix a = minus ? DenseMatrix(model.B + z * model.C) : DenseMatrix(z * model.B + model.C);
    Eigen::LLT<DenseMatrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("reduced matrix is not positive definite");
    out.c = llt.solve(model.g);
  } else {
    out.c = Vector(0);
  }
  out.residual_norm = residual_norm(model, z, out.c, &out.clamped);
  out.delta = estimator_from_residual(model, z, out.residual_norm);
  return out;
}

double residual_norm(const RbmModel& model, double z, const Vector& c, bool* clamped) {
  double projected = 0;
  if (c.size() > 0) projected = (model.qf - model.T * theta_of(model, z, c)).squaredNorm();
  const double sq = model.f_perp_norm * model.f_perp_norm + projected;
  if (clamped) *clamped = false;
  return std::sqrt(sq);
}

double estimator_from_residual(const RbmModel& model, double z, double residual) {
  const double scale = model.C2 / std::sqrt(model.lambda_min_M);
  const double coercivity = model.sigma == Sigma::Minus ? model.C2 * z + 1.0 : z + model.C2;
  return scale * residual / coercivity;
}

double estimator(const RbmModel& model, double y, const Vector& c) {
  const double z = std::exp(-y);
  return estimator_from_residual(model, z, residual_norm(model, z, c));
}

double direct_residual_norm(const RbmModel& model, const SparseSymMatrix& s, const SparseSymMatrix& m,
                            const Vector& f, double z, const Vector& c) {
  const Vector w = lift(model, c);
  const Vector aw = model.sigma == Sigma::Minus ? Vector(s * w + z * (m * w)) : Vector(z * (s * w) + m * w);
  return (f - aw).norm();
}

Vector lift(const RbmModel& model, const Vector& c) {
  if (model.dimension() == 0) return Vector::Zero(model.truth_dim);
  return model.U * c;
}

RbmModel greedy_train(Sigma sigma, const KatoSolver& solver, const SparseSymMatrix& s, const SparseSymMatrix& m,
                      const Vector& f, const SpectralBounds& bounds, int mesh_level, const GreedyConfig& config) {
  if (!(config.tol > 0)) throw UsageError("greedy tolerance must be positive");
  if (config.max_basis < 1) throw UsageError("greedy basis cap must be positive");
  const Index n_truth = f.size();
  RbmModel model;
  model.sigma = sigma;
  model.mesh_level = mesh_level;
  model.truth_dim = n_truth;
  model.U.resize(n_truth, 0);
  model.f_norm = f.norm();
  model.f_perp_norm = model.f_norm;
  model.C2 = bounds.C2();
  model.lambda_min_M = bounds.lambda_min_M;
  model.T.resize(0, 0);
  model.qf.resize(0);

  ResidualBuilder residual;
  residual.Q.resize(n_truth, 0);
  residual.f_perp = f;
  residual.model_f_ = f;

  std::vector<double> grid = training_grid(config.grid_size);
  std::vector<char> skipped(grid.size(), 0);
  std::vector<double> deltas(grid.size());

  auto sweep = [&]() {
    parallel_for(grid.size(), worker_count(), [&](std::size_t i, unsigned) {
      deltas[i] = reduced_solve_z(model, grid[i]).delta;
    });
    double worst = 0;
    std::size_t arg = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      worst = std::max(worst, deltas[i]);
      if (!skipped[i] && (arg == grid.size() || deltas[i] > deltas[arg])) arg = i;
    }
    return std::pair{worst, arg};
  };

  model.history.push_back(sweep().first);

  std::size_t refined_at = 0;
  std::size_t next;
  if (config.random_first_seed) {
    std::mt19937_64 rng(*config.random_first_seed);
    next = std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng);
  } else {
    next = (grid.size() - 1) / 2;
  }

  while (model.dimension() < config.max_basis) {
    const double z = grid[next];
    Vector w = sigma == Sigma::Minus ? solver.shifted().solve(1.0, z, f) : solver.shifted().solve(z, 1.0, f);
    const double original = mass_norm(m, w);
    for (int pass = 0; pass < 2; ++pass) w -= model.U * (model.U.transpose() * (m * w));
    const double remaining = mass_norm(m, w);
    if (!(remaining > config.reject_ratio * original)) {
      skipped[next] = 1;
    } else {
      const Vector u = w / remaining;
      const Index n = model.dimension();
      model.U.conservativeResize(n_truth, n + 1);
      model.U.col(n) = u;
      model.snapshot_z.push_back(z);
      skipped[next] = 1;

      const Vector su = s * u;
      const Vector mu = m * u;
      model.B.conservativeResize(n + 1, n + 1);
      model.C.conservativeResize(n + 1, n + 1);
      const Vector b_col = model.U.transpose() * su;
      const Vector c_col = model.U.transpose() * mu;
      model.B.col(n) = b_col;
      model.B.row(n) = b_col.transpose();
      model.C.col(n) = c_col;
      model.C.row(n) = c_col.transpose();
      model.g.conservativeResize(n + 1);
      model.g[n] = u.dot(f);
      residual.add_column(su, model);
      residual.add_column(mu, model);
      refresh_spectra(model);
    }

    auto [worst, arg] = sweep();
    if (worst <= config.tol && config.refine_grid && refine(grid, model, config.tol, skipped)) {
      deltas.resize(grid.size());
      std::tie(worst, arg) = sweep();
      refined_at = model.history.size();
    }
    model.history.push_back(worst);
    if (worst <= config.tol || arg == grid.size()) break;
    const std::size_t h = model.history.size() - 1;
    // A refinement raises the grid maximum, so stagnation is judged only
    // against entries recorded on the current grid.
    if (h >= refined_at + std::size_t(config.stagnation_window) &&
        model.history[h] >= model.history[h - config.stagnation_window]) {
      model.stagnated = true;
      break;
    }
    next = arg;
  }
  return model;
}

RbmFractional rbm_solve_fractional(const RbmModel& minus, const RbmModel& plus, double s, const RulePair& rules) {
  if (minus.sigma != Sigma::Minus || plus.sigma != Sigma::Plus) throw UsageError("rbm: models passed in wrong order");
  if (minus.truth_dim != plus.truth_dim) throw UsageError("rbm: models have different truth dimensions");
  KatoConfig{.s = s, .m_minus = rules.minus.size(), .m_plus = rules.plus.size()}.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RbmFractional out;
  auto accumulate = [&](const RbmModel& model, const GaussRule& rule, double s_sigma) {
    const double b0 = beta0(s_sigma);
    Vector acc = Vector::Zero(model.dimension());
    for (int j = 0; j < rule.size(); ++j) {
      const ReducedSolution r = reduced_solve_z(model, std::exp(-rule.nodes[j] / s_sigma));
      const double w = b0 * rule.weights[j];
      if (model.dimension() > 0) acc += w * r.c;
      out.certificate += w * r.delta;
    }
    return lift(model, acc);
  };
  const Vector u_minus = accumulate(minus, rules.minus, 1.0 - s);
  const Vector u_plus = accumulate(plus, rules.plus, s);
  out.coefficients = u_minus + u_plus;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double certificate_delta_N(const RbmModel& minus, const RbmModel& plus, double s, const RulePair& rules) {
  double total = 0;
  for (const auto& [model, rule, s_sigma] :
       {std::tuple<const RbmModel&, const GaussRule&, double>{minus, rules.minus, 1.0 - s},
        std::tuple<const RbmModel&, const GaussRule&, double>{plus, rules.plus, s}}) {
    const double b0 = beta0(s_sigma);
    for (int j = 0; j < rule.size(); ++j)
      total += b0 * rule.weights[j] * reduced_solve_z(model, std::exp(-rule.nodes[j] / s_sigma)).delta;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Binary model file: magic, version, header scalars, then little-endian
// float64 arrays with matrices in row-major order.

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'R', 'A', 'C', 'R', 'B', 'M', '\n'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(char(bits & 0xff));
    if constexpr (sizeof(T) > 1) bits >>= 8;
  }
}

template <class T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw NumericalError("model file truncated");
    bits |= U(std::uint8_t(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

void put_matrix(std::ostream& out, const DenseMatrix& a) {
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) put(out, a(i, j));
}

DenseMatrix get_matrix(std::istream& in, Index rows, Index cols) {
  DenseMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = get<double>(in);
  return a;
}

}  // namespace

void save_model(const RbmModel& model, const std::string& path) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write model file " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, std::int32_t(model.sigma));
    put(out, std::int32_t(model.mesh_level));
    put(out, std::int64_t(model.truth_dim));
    put(out, std::int64_t(model.dimension()));
    put(out, std::int64_t(model.T.rows()));
    put(out, std::int64_t(model.history.size()));
    put(out, std::uint8_t(model.stagnated));
    for (double v : {model.f_perp_norm, model.f_norm, model.C2, model.lambda_min_M, model.B_eig_min, model.B_eig_max,
                     model.C_eig_min, model.C_eig_max})
      put(out, v);
    for (double z : model.snapshot_z) put(out, z);
    put_matrix(out, model.U);
    put_matrix(out, model.B);
    put_matrix(out, model.C);
    for (Index i = 0; i < model.g.size(); ++i) put(out, model.g[i]);
    put_matrix(out, model.T);
    for (Index i = 0; i < model.qf.size(); ++i) put(out, model.qf[i]);
    for (double h : model.history) put(out, h);
    if (!out) throw NumericalError("failed writing model file " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

RbmModel load_model(const std::string& path, std::optional<Index> expected_truth_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open model file " + path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw NumericalError(path + ": not an RBM model file (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw NumericalError(path + ": model version " + std::to_string(version) + ", expected " + std::to_string(kVersion));
  RbmModel model;
  const auto sigma = get<std::int32_t>(in);
  if (sigma != 0 && sigma != 1) throw NumericalError(path + ": corrupt sigma field");
  model.sigma = Sigma(sigma);
  model.mesh_level = get<std::int32_t>(in);
  model.truth_dim = get<std::int64_t>(in);
  const auto n = get<std::int64_t>(in);
  const auto q = get<std::int64_t>(in);
  const auto history = get<std::int64_t>(in);
  if (model.truth_dim < 1 || n < 0 || q < 0 || q > 2 * n || n > model.truth_dim || history < 0 || history > 1 << 20)
    throw NumericalError(path + ": corrupt header sizes");
  if (expected_truth_dim && *expected_truth_dim != model.truth_dim)
    throw NumericalError(path + ": model truth dimension " + std::to_string(model.truth_dim) + " does not match " +
                         std::to_string(*expected_truth_dim));
  model.stagnated = get<std::uint8_t>(in) != 0;
  for (double* v : {&model.f_perp_norm, &model.f_norm, &model.C2, &model.lambda_min_M, &model.B_eig_min,
                    &model.B_eig_max, &model.C_eig_min, &model.C_eig_max})
    *v = get<double>(in);
  model.snapshot_z.resize(n);
  for (auto& z : model.snapshot_z) z = get<double>(in);
  model.U = get_matrix(in, model.truth_dim, n);
  model.B = get_matrix(in, n, n);
  model.C = get_matrix(in, n, n);
  model.g.resize(n);
  for (Index i = 0; i < n; ++i) model.g[i] = get<double>(in);
  model.T = get_matrix(in, q, 2 * n);
  model.qf.resize(q);
  for (Index i = 0; i < q; ++i) model.qf[i] = get<double>(in);
  model.history.resize(history);
  for (auto& h : model.history) h = get<double>(in);
  if (in.peek() != EOF) throw NumericalError(path + ": trailing data after model");
  return model;
}

}  // namespace fracsolve
