#include "fracsolve/testcases.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace fracsolve {
namespace {

constexpr double kPi = std::numbers::pi;

// cos(n pi/4) - cos(3 n pi/4), exact by residue mod 8.
double bump_factor(int n) {
  static constexpr std::array<double, 8> table = {0.0, std::numbers::sqrt2, 0.0, -std::numbers::sqrt2,
                                                  0.0, -std::numbers::sqrt2, 0.0, std::numbers::sqrt2};
  return table[std::size_t(n % 8)];
}

// Five-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 5> kGaussX = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
                                           0.95308992296933200};
constexpr std::array<double, 5> kGaussW = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                           0.23931433524968324, 0.11846344252809454};

}  // namespace

double EigenMode::lambda() const { return kPi * kPi * (double(n) * n + double(m) * m); }

double EigenMode::operator()(double x, double y) const { return std::sin(n * kPi * x) * std::sin(m * kPi * y); }

Vector EigenMode::nodal(const CartesianMesh& mesh) const {
  Vector v(mesh.dofs());
  for (int iy = 1; iy < mesh.nodes_per_side() - 1; ++iy)
    for (int ix = 1; ix < mesh.nodes_per_side() - 1; ++ix)
      v[mesh.dof(ix, iy)] = (*this)(mesh.coordinate(ix), mesh.coordinate(iy));
  return v;
}

LoadFunction ManufacturedCase::load() const {
  switch (kind) {
    case CaseKind::Sine:
      return LoadFunction::sine_product();
    case CaseKind::MixedModes:
      return LoadFunction::mixed_modes();
    case CaseKind::SquareBump:
      return LoadFunction::square_bump();
  }
  throw UsageError("unknown case");
}

ManufacturedCase case_from_name(const std::string& name) {
  if (name == "sine") return {CaseKind::Sine, "sine"};
  if (name == "mixed") return {CaseKind::MixedModes, "mixed"};
  if (name == "bump") return {CaseKind::SquareBump, "bump"};
  throw UsageError("unknown case '" + name + "' (expected sine, mixed or bump)");
}

std::vector<ManufacturedCase> all_cases() { return {case_from_name("sine"), case_from_name("mixed"), case_from_name("bump")}; }

double bump_coefficient(int n, int m) {
  if (n < 1 || m < 1) throw UsageError("bump_coefficient: wave numbers must be positive");
  return 4.0 / (double(n) * m * kPi * kPi) * bump_factor(n) * bump_factor(m);
}

double bump_tail_bound(double s, int terms) {
  if (terms < 2) throw UsageError("bump_tail_bound: need at least 2 terms");
  // lambda_nm >= pi^2 max(n,m)^2, sum over odd m of 1/m^2 = pi^2/8, and the
  // odd-n tail sum compared with an integral.
  const double p = 1.0 + 4.0 * s;
  const double tail_sq = 4.0 / (kPi * kPi) * std::pow(kPi, -4.0 * s) * std::pow(terms - 1.0, -p) / (2.0 * p);
  return std::sqrt(tail_sq);
}

ExactSolution::ExactSolution(const ManufacturedCase& c, double s, int series_terms)
    : case_(c), s_(s), terms_(series_terms) {
  if (!(s > 0 && s < 1)) throw UsageError("exact solution: s must lie in (0, 1)");
  if (case_.kind != CaseKind::SquareBump) return;
  for (int n = 1; n <= terms_; n += 2) modes_.push_back(n);
  const Index k = Index(modes_.size());
  coeff_.resize(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) {
      const EigenMode mode{modes_[a], modes_[b]};
      coeff_(a, b) = bump_coefficient(mode.n, mode.m) * std::pow(mode.lambda(), -s_);
    }
  tail_ = bump_tail_bound(s_, terms_);
}

double ExactSolution::operator()(double x, double y) const {
  return on_grid({x}, {y})(0, 0);
}

DenseMatrix ExactSolution::on_grid(const std::vector<double>& xs, const std::vector<double>& ys) const {
  const Index nx = Index(xs.size());
  const Index ny = Index(ys.size());
  auto separable = [&](int n, int m, double amplitude) {
    Vector fx(nx), fy(ny);
    for (Index i = 0; i < nx; ++i) fx[i] = std::sin(n * kPi * xs[i]);
    for (Index j = 0; j < ny; ++j) fy[j] = std::sin(m * kPi * ys[j]);
    return DenseMatrix(amplitude * fx * fy.transpose());
  };
  switch (case_.kind) {
    case CaseKind::Sine:
      return separable(1, 1, std::pow(2 * kPi * kPi, -s_));
    case CaseKind::MixedModes:
      return separable(4, 10, std::pow(116 * kPi * kPi, -s_));
    case CaseKind::SquareBump: {
      const Index k = Index(modes_.size());
      DenseMatrix sx(k, nx), sy(k, ny);
      for (Index a = 0; a < k; ++a) {
        for (Index i = 0; i < nx; ++i) sx(a, i) = std::sin(modes_[a] * kPi * xs[i]);
        for (Index j = 0; j < ny; ++j) sy(a, j) = std::sin(modes_[a] * kPi * ys[j]);
      }
      return sx.transpose() * coeff_ * sy;
    }
  }
  throw UsageError("unknown case");
}

Vector ExactSolution::nodal(const CartesianMesh& mesh) const {
  std::vector<double> coords;
  for (int i = 1; i < mesh.nodes_per_side() - 1; ++i) coords.push_back(mesh.coordinate(i));
  const DenseMatrix grid = on_grid(coords, coords);
  Vector v(mesh.dofs());
  const int inner = mesh.interior_per_side();
  for (int iy = 0; iy < inner; ++iy)
    for (int ix = 0; ix < inner; ++ix) v[Index(iy) * inner + ix] = grid(ix, iy);
  return v;
}

ErrorNorm error_norm_from_name(const std::string& name) {
  if (name == "nodal") return ErrorNorm::NodalMass;
  if (name == "l2") return ErrorNorm::ContinuousL2;
  throw UsageError("unknown error norm '" + name + "' (expected nodal or l2)");
}

const char* error_norm_name(ErrorNorm norm) { return norm == ErrorNorm::NodalMass ? "nodal" : "l2"; }

double l2_error(const CartesianMesh& mesh, const SparseSymMatrix& mass, const Vector& numeric,
                const ExactSolution& exact, ErrorNorm norm) {
  if (numeric.size() != mesh.dofs() || mass.dimension() != mesh.dofs())
    throw UsageError("l2_error: vector or matrix does not match the mesh");
  if (norm == ErrorNorm::NodalMass) {
    const Vector e = numeric - exact.nodal(mesh);
    return std::sqrt(std::max(0.0, mass.quadratic_form(e)));
  }
  const int cells = mesh.cells_per_side();
  const double h = mesh.h();
  std::vector<double> pts;
  pts.reserve(std::size_t(cells) * kGaussX.size());
  for (int c = 0; c < cells; ++c)
    for (double g : kGaussX) pts.push_back(mesh.coordinate(c) + g * h);
  const DenseMatrix u = exact.on_grid(pts, pts);

  auto nodal_value = [&](int ix, int iy) {
    const Index d = mesh.dof(ix, iy);
    return d < 0 ? 0.0 : numeric[d];
  };
  double sum = 0;
  for (int cy = 0; cy < cells; ++cy) {
    for (int cx = 0; cx < cells; ++cx) {
      const double v00 = nodal_value(cx, cy), v10 = nodal_value(cx + 1, cy);
      const double v01 = nodal_value(cx, cy + 1), v11 = nodal_value(cx + 1, cy + 1);
      for (std::size_t a = 0; a < kGaussX.size(); ++a) {
        for (std::size_t b = 0; b < kGaussX.size(); ++b) {
          const double xi = kGaussX[a], eta = kGaussX[b];
          const double uh = v00 * (1 - xi) * (1 - eta) + v10 * xi * (1 - eta) + v01 * (1 - xi) * eta + v11 * xi * eta;
          const double diff = uh - u(Index(cx) * 5 + Index(a), Index(cy) * 5 + Index(b));
          sum += kGaussW[a] * kGaussW[b] * diff * diff;
        }
      }
    }
  }
  return std::sqrt(sum) * h;
}

}  // namespace fracsolve
