#pragma once

// Cartesian Q1 finite elements on the unit square with homogeneous
// Dirichlet conditions. Boundary nodes are eliminated; interior nodes are
// numbered row-major (x fastest).

#include "fracsolve/common.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace fracsolve {

class CartesianMesh {
 public:
  static constexpr int kMinLevel = 2;
  static constexpr int kMaxLevel = 12;

  /// Mesh with 2^level equidistant points per side. Throws UsageError
  /// outside [kMinLevel, kMaxLevel].
  static CartesianMesh build(int level);

  int level() const { return level_; }
  int nodes_per_side() const { return nodes_per_side_; }
  int cells_per_side() const { return nodes_per_side_ - 1; }
  int interior_per_side() const { return nodes_per_side_ - 2; }
  double h() const { return h_; }
  Index dofs() const { return Index(interior_per_side()) * interior_per_side(); }

  double coordinate(int i) const { return double(i) / double(cells_per_side()); }

  /// Interior DOF of node (ix, iy), or -1 for a boundary node.
  Index dof(int ix, int iy) const {
    if (ix <= 0 || iy <= 0 || ix >= nodes_per_side_ - 1 || iy >= nodes_per_side_ - 1) return -1;
    return Index(iy - 1) * interior_per_side() + (ix - 1);
  }

 private:
  CartesianMesh(int level, int n, double h) : level_(level), nodes_per_side_(n), h_(h) {}
  int level_;
  int nodes_per_side_;
  double h_;
};

/// Symmetric sparse matrix over interior DOFs. Both triangles are stored.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;
  explicit SparseSymMatrix(SparseMatrix m);

  Index dimension() const { return matrix_.rows(); }
  Index nonzeros() const { return matrix_.nonZeros(); }
  const SparseMatrix& matrix() const { return matrix_; }

  double coeff(Index i, Index j) const { return matrix_.coeff(i, j); }
  Vector operator*(const Vector& v) const { return matrix_ * v; }
  double quadratic_form(const Vector& v) const { return v.dot(matrix_ * v); }

  /// Entry (i,j) stored iff (j,i) stored, with bitwise equal values.
  bool exactly_symmetric() const;
  bool same_pattern(const SparseSymMatrix& other) const;

 private:
  SparseMatrix matrix_;
};

struct LoadVector {
  Vector values;
  Index size() const { return values.size(); }
};

/// Right-hand side descriptor. The three manufactured data sets, nodal
/// data (interpolated, then integrated exactly), and smooth callables for
/// tests.
class LoadFunction {
 public:
  enum class Kind { Zero, SineProduct, MixedModes, SquareBump, Nodal, Smooth };

  static LoadFunction zero();
  static LoadFunction sine_product();
  static LoadFunction mixed_modes();
  /// Indicator of [0.25, 0.75]^2.
  static LoadFunction square_bump();
  static LoadFunction nodal(Vector interior_values);
  static LoadFunction smooth(std::function<double(double, double)> f, std::string name);

  /// Registered names: zero, sine, mixed, bump.
  static LoadFunction from_name(const std::string& name);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double operator()(double x, double y) const;
  const Vector& nodal_values() const { return nodal_; }

 private:
  LoadFunction(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}
  Kind kind_;
  std::string name_;
  std::function<double(double, double)> fn_;
  Vector nodal_;
};

SparseSymMatrix assemble_stiffness(const CartesianMesh& mesh);
SparseSymMatrix assemble_mass(const CartesianMesh& mesh);
LoadVector assemble_load(const CartesianMesh& mesh, const LoadFunction& f);

/// MatrixMarket coordinate text, 1-based, 17 significant digits.
void write_coordinate(std::ostream& out, const SparseSymMatrix& a);

}  // namespace fracsolve
