#include "fracsolve/mesh_fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <vector>

namespace fracsolve {
namespace {

constexpr double kPi = std::numbers::pi;

// Local node order on a cell: 0=(0,0), 1=(1,0), 2=(0,1), 3=(1,1).
using ElementMatrix = std::array<std::array<double, 4>, 4>;

// -Laplace element matrix of a square Q1 cell; independent of h in 2D.
constexpr ElementMatrix kStiffness = {{
    {2.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 3.0},
    {-1.0 / 6.0, 2.0 / 3.0, -1.0 / 3.0, -1.0 / 6.0},
    {-1.0 / 6.0, -1.0 / 3.0, 2.0 / 3.0, -1.0 / 6.0},
    {-1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, 2.0 / 3.0},
}};

// Mass element matrix divided by h^2.
constexpr ElementMatrix kMassUnit = {{
    {4.0 / 36.0, 2.0 / 36.0, 2.0 / 36.0, 1.0 / 36.0},
    {2.0 / 36.0, 4.0 / 36.0, 1.0 / 36.0, 2.0 / 36.0},
    {2.0 / 36.0, 1.0 / 36.0, 4.0 / 36.0, 2.0 / 36.0},
    {1.0 / 36.0, 2.0 / 36.0, 2.0 / 36.0, 4.0 / 36.0},
}};

std::array<Index, 4> cell_dofs(const CartesianMesh& mesh, int cx, int cy) {
  return {mesh.dof(cx, cy), mesh.dof(cx + 1, cy), mesh.dof(cx, cy + 1), mesh.dof(cx + 1, cy + 1)};
}

SparseSymMatrix assemble(const CartesianMesh& mesh, const ElementMatrix& element, double scale) {
  const int cells = mesh.cells_per_side();
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(std::size_t(cells) * cells * 16);
  for (int cy = 0; cy < cells; ++cy) {
    for (int cx = 0; cx < cells; ++cx) {
      const auto dofs = cell_dofs(mesh, cx, cy);
      for (int a = 0; a < 4; ++a) {
        if (dofs[a] < 0) continue;
        for (int b = 0; b < 4; ++b) {
          if (dofs[b] < 0) continue;
          triplets.emplace_back(int(dofs[a]), int(dofs[b]), scale * element[a][b]);
        }
      }
    }
  }
  SparseMatrix m(mesh.dofs(), mesh.dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return SparseSymMatrix(std::move(m));
}

struct Rule1D {
  std::array<double, 3> x;  // on [0,1]
  std::array<double, 3> w;
};

// Three-point Gauss-Legendre on [0,1]; exact to degree 5.
constexpr Rule1D kGauss3 = {
    {0.5 - 0.3872983346207416885, 0.5, 0.5 + 0.3872983346207416885},
    {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0},
};

// Two-point Gauss-Legendre on [0,1]; exact for the bilinear integrand of
// the indicator load.
constexpr std::array<double, 2> kGauss2x = {0.5 - 0.28867513459481288225, 0.5 + 0.28867513459481288225};

std::array<double, 4> shape(double xi, double eta) {
  return {(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta};
}

void integrate_smooth(const CartesianMesh& mesh, const LoadFunction& f, Vector& load) {
  const int cells = mesh.cells_per_side();
  const double h = mesh.h();
  for (int cy = 0; cy < cells; ++cy) {
    for (int cx = 0; cx < cells; ++cx) {
      const auto dofs = cell_dofs(mesh, cx, cy);
      const double x0 = mesh.coordinate(cx);
      const double y0 = mesh.coordinate(cy);
      std::array<double, 4> local{};
      for (int qy = 0; qy < 3; ++qy) {
        for (int qx = 0; qx < 3; ++qx) {
          const double xi = kGauss3.x[qx];
          const double eta = kGauss3.x[qy];
          const double weight = kGauss3.w[qx] * kGauss3.w[qy] * h * h;
          const double value = f(x0 + xi * h, y0 + eta * h);
          const auto n = shape(xi, eta);
          for (int a = 0; a < 4; ++a) local[a] += weight * value * n[a];
        }
      }
      for (int a = 0; a < 4; ++a)
        if (dofs[a] >= 0) load[dofs[a]] += local[a];
    }
  }
}

void integrate_square_bump(const CartesianMesh& mesh, Vector& load) {
  constexpr double lo = 0.25;
  constexpr double hi = 0.75;
  const int cells = mesh.cells_per_side();
  const double h = mesh.h();
  for (int cy = 0; cy < cells; ++cy) {
    for (int cx = 0; cx < cells; ++cx) {
      const double x0 = mesh.coordinate(cx);
      const double y0 = mesh.coordinate(cy);
      const double xa = std::max(x0, lo);
      const double xb = std::min(mesh.coordinate(cx + 1), hi);
      const double ya = std::max(y0, lo);
      const double yb = std::min(mesh.coordinate(cy + 1), hi);
      if (xb <= xa || yb <= ya) continue;
      const auto dofs = cell_dofs(mesh, cx, cy);
      std::array<double, 4> local{};
      const double weight = 0.25 * (xb - xa) * (yb - ya);
      for (double gx : kGauss2x) {
        for (double gy : kGauss2x) {
          const double xi = (xa + gx * (xb - xa) - x0) / h;
          const double eta = (ya + gy * (yb - ya) - y0) / h;
          const auto n = shape(xi, eta);
          for (int a = 0; a < 4; ++a) local[a] += weight * n[a];
        }
      }
      for (int a = 0; a < 4; ++a)
        if (dofs[a] >= 0) load[dofs[a]] += local[a];
    }
  }
}

}  // namespace

CartesianMesh CartesianMesh::build(int level) {
  if (level < kMinLevel || level > kMaxLevel)
    throw UsageError("mesh level " + std::to_string(level) + " outside [" + std::to_string(kMinLevel) + ", " +
                     std::to_string(kMaxLevel) + "]");
  const int n = 1 << level;
  return CartesianMesh(level, n, 1.0 / double(n - 1));
}

SparseSymMatrix::SparseSymMatrix(SparseMatrix m) : matrix_(std::move(m)) { matrix_.makeCompressed(); }

bool SparseSymMatrix::exactly_symmetric() const {
  if (matrix_.rows() != matrix_.cols()) return false;
  const SparseMatrix t = matrix_.transpose();
  if (t.nonZeros() != matrix_.nonZeros()) return false;
  for (Index k = 0; k < matrix_.outerSize() + 1; ++k)
    if (t.outerIndexPtr()[k] != matrix_.outerIndexPtr()[k]) return false;
  for (Index k = 0; k < matrix_.nonZeros(); ++k) {
    if (t.innerIndexPtr()[k] != matrix_.innerIndexPtr()[k]) return false;
    if (t.valuePtr()[k] != matrix_.valuePtr()[k]) return false;
  }
  return true;
}

bool SparseSymMatrix::same_pattern(const SparseSymMatrix& other) const {
  const auto& a = matrix_;
  const auto& b = other.matrix_;
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  return std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

LoadFunction LoadFunction::zero() {
  LoadFunction f(Kind::Zero, "zero");
  f.fn_ = [](double, double) { return 0.0; };
  return f;
}

LoadFunction LoadFunction::sine_product() {
  LoadFunction f(Kind::SineProduct, "sine");
  f.fn_ = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
  return f;
}

LoadFunction LoadFunction::mixed_modes() {
  LoadFunction f(Kind::MixedModes, "mixed");
  f.fn_ = [](double x, double y) { return std::sin(4 * kPi * x) * std::sin(10 * kPi * y); };
  return f;
}

LoadFunction LoadFunction::square_bump() {
  LoadFunction f(Kind::SquareBump, "bump");
  f.fn_ = [](double x, double y) { return (x >= 0.25 && x <= 0.75 && y >= 0.25 && y <= 0.75) ? 1.0 : 0.0; };
  return f;
}

LoadFunction LoadFunction::nodal(Vector interior_values) {
  LoadFunction f(Kind::Nodal, "nodal");
  f.nodal_ = std::move(interior_values);
  return f;
}

LoadFunction LoadFunction::smooth(std::function<double(double, double)> fn, std::string name) {
  LoadFunction f(Kind::Smooth, std::move(name));
  f.fn_ = std::move(fn);
  return f;
}

LoadFunction LoadFunction::from_name(const std::string& name) {
  if (name == "zero") return zero();
  if (name == "sine") return sine_product();
  if (name == "mixed") return mixed_modes();
  if (name == "bump") return square_bump();
  throw UsageError("unknown load descriptor '" + name + "'");
}

double LoadFunction::operator()(double x, double y) const {
  if (!fn_) throw UsageError("load descriptor '" + name_ + "' has no pointwise evaluator");
  return fn_(x, y);
}

SparseSymMatrix assemble_stiffness(const CartesianMesh& mesh) { return assemble(mesh, kStiffness, 1.0); }

SparseSymMatrix assemble_mass(const CartesianMesh& mesh) { return assemble(mesh, kMassUnit, mesh.h() * mesh.h()); }

LoadVector assemble_load(const CartesianMesh& mesh, const LoadFunction& f) {
  LoadVector load{Vector::Zero(mesh.dofs())};
  switch (f.kind()) {
    case LoadFunction::Kind::Zero:
      break;
    case LoadFunction::Kind::SineProduct:
    case LoadFunction::Kind::MixedModes:
    case LoadFunction::Kind::Smooth:
      integrate_smooth(mesh, f, load.values);
      break;
    case LoadFunction::Kind::SquareBump:
      integrate_square_bump(mesh, load.values);
      break;
    case LoadFunction::Kind::Nodal:
      if (f.nodal_values().size() != mesh.dofs())
        throw UsageError("nodal load has " + std::to_string(f.nodal_values().size()) + " values, mesh has " +
                         std::to_string(mesh.dofs()) + " interior DOFs");
      load.values = assemble_mass(mesh) * f.nodal_values();
      break;
  }
  return load;
}

void write_coordinate(std::ostream& out, const SparseSymMatrix& a) {
  const auto& m = a.matrix();
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Index col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace fracsolve
