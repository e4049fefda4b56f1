#include "doctest.h"
#include "oracles.hpp"

#include "fracsolve/linalg.hpp"
#include "fracsolve/mesh_fem.hpp"

#include <sstream>

using namespace fracsolve;

TEST_CASE("mesh sizes and numbering") {
  CHECK(CartesianMesh::build(2).nodes_per_side() == 4);
  CHECK(CartesianMesh::build(2).dofs() == 4);
  CHECK(CartesianMesh::build(3).nodes_per_side() == 8);
  CHECK(CartesianMesh::build(3).dofs() == 36);
  CHECK(CartesianMesh::build(7).nodes_per_side() == 128);
  CHECK(CartesianMesh::build(7).dofs() == 126 * 126);
  CHECK_THROWS_AS(CartesianMesh::build(1), UsageError);
  CHECK_THROWS_AS(CartesianMesh::build(13), UsageError);

  for (int level = 2; level <= 12; ++level) {
    const auto mesh = CartesianMesh::build(level);
    CHECK(mesh.h() * (mesh.nodes_per_side() - 1) == 1.0);
    CHECK(mesh.dofs() == Index(mesh.nodes_per_side() - 2) * (mesh.nodes_per_side() - 2));
  }
  const auto mesh = CartesianMesh::build(3);
  CHECK(mesh.dof(0, 3) == -1);
  CHECK(mesh.dof(7, 3) == -1);
  CHECK(mesh.dof(1, 1) == 0);
  CHECK(mesh.dof(2, 1) == 1);
  CHECK(mesh.dof(1, 2) == 6);
  CHECK(mesh.dof(6, 6) == 35);
}

TEST_CASE("stiffness stencil is h-independent") {
  for (int level : {3, 4, 6}) {
    const auto mesh = CartesianMesh::build(level);
    const auto s = assemble_stiffness(mesh);
    const int c = mesh.nodes_per_side() / 2;
    const Index i = mesh.dof(c, c);
    CHECK(s.coeff(i, i) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy) CHECK(s.coeff(i, mesh.dof(c + dx, c + dy)) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    for (Index col = 0; col < s.matrix().outerSize(); ++col)
      CHECK(s.matrix().outerIndexPtr()[col + 1] - s.matrix().outerIndexPtr()[col] <= 9);
    CHECK(s.exactly_symmetric());
  }
}

TEST_CASE("mass stencil and scaling") {
  const auto coarse = CartesianMesh::build(4);
  const auto fine = CartesianMesh::build(6);
  for (const auto& mesh : {coarse, fine}) {
    const auto m = assemble_mass(mesh);
    const double h = mesh.h();
    const int c = mesh.nodes_per_side() / 2;
    const Index i = mesh.dof(c, c);
    CHECK(m.coeff(i, i) == doctest::Approx(4 * h * h / 9).epsilon(1e-15));
    CHECK(m.coeff(i, mesh.dof(c + 1, c)) == doctest::Approx(h * h / 9).epsilon(1e-15));
    CHECK(m.coeff(i, mesh.dof(c + 1, c + 1)) == doctest::Approx(h * h / 36).epsilon(1e-15));
    double row = 0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) row += m.coeff(i, mesh.dof(c + dx, c + dy));
    CHECK(row == doctest::Approx(h * h).epsilon(1e-14));
    CHECK(m.exactly_symmetric());
    const Vector ones = Vector::Ones(mesh.dofs());
    CHECK(m.quadratic_form(ones) < 1.0);
    CHECK(m.quadratic_form(ones) > 0.0);
  }
  const auto mc = assemble_mass(coarse);
  const auto mf = assemble_mass(fine);
  const double ratio = (coarse.h() / fine.h()) * (coarse.h() / fine.h());
  CHECK(mc.coeff(0, 0) / mf.coeff(0, 0) == doctest::Approx(ratio).epsilon(1e-14));
}

TEST_CASE("stiffness and mass share a pattern and are positive definite") {
  for (int level = 2; level <= 6; ++level) {
    const auto mesh = CartesianMesh::build(level);
    const auto s = assemble_stiffness(mesh);
    const auto m = assemble_mass(mesh);
    CHECK(s.same_pattern(m));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Vector v = oracle::random_vector(mesh.dofs(), seed);
      CHECK(s.quadratic_form(v) > 0);
      CHECK(m.quadratic_form(v) > 0);
    }
    CHECK(s.quadratic_form(Vector::Ones(mesh.dofs())) > 0);
  }
}

TEST_CASE("load vectors") {
  const auto mesh = CartesianMesh::build(7);
  CHECK(assemble_load(mesh, LoadFunction::zero()).values.isZero(0));

  // Sum of the sine load equals the integral of f against the sum of the
  // interior hats, which factorizes into 1D integrals.
  const double h = mesh.h();
  const double pi = oracle::pi;
  const double one_d = 2 * std::cos(pi * h) / pi + 2 * (std::sin(pi * h) - pi * h * std::cos(pi * h)) / (pi * pi * h);
  const double sine_sum = assemble_load(mesh, LoadFunction::sine_product()).values.sum();
  CHECK(sine_sum == doctest::Approx(one_d * one_d).epsilon(1e-10));
  CHECK(std::abs(sine_sum - 4 / (pi * pi)) <= 4 * h * h / 3 + 1e-6);

  for (int level : {3, 5, 7}) {
    const auto mk = CartesianMesh::build(level);
    const Vector bump = assemble_load(mk, LoadFunction::square_bump()).values;
    CHECK(bump.sum() == doctest::Approx(0.25).epsilon(1e-13));
    // Support: entries vanish for nodes whose hats miss [1/4, 3/4]^2.
    for (int iy = 1; iy < mk.nodes_per_side() - 1; ++iy)
      for (int ix = 1; ix < mk.nodes_per_side() - 1; ++ix) {
        const double x = mk.coordinate(ix), y = mk.coordinate(iy);
        const bool disjoint = x + mk.h() <= 0.25 || x - mk.h() >= 0.75 || y + mk.h() <= 0.25 || y - mk.h() >= 0.75;
        if (disjoint) CHECK(bump[mk.dof(ix, iy)] == 0.0);
        else CHECK(bump[mk.dof(ix, iy)] > 0.0);
      }
  }
  CHECK_THROWS_AS(LoadFunction::from_name("nope"), UsageError);
  CHECK(LoadFunction::from_name("bump").kind() == LoadFunction::Kind::SquareBump);
}

TEST_CASE("load quadrature is exact for quadratics") {
  // Hat moments: int x^a hat_i = h, h x_i, h x_i^2 + h^3/6 for a = 0, 1, 2.
  const auto mesh = CartesianMesh::build(4);
  const double h = mesh.h();
  auto moment = [h](int a, double xi) {
    if (a == 0) return h;
    if (a == 1) return h * xi;
    return h * xi * xi + h * h * h / 6;
  };
  struct Term {
    double c;
    int a, b;
  };
  const std::vector<Term> poly = {{1.0, 0, 0}, {2.0, 1, 0}, {-3.0, 0, 1}, {1.5, 2, 0}, {0.7, 1, 1}, {-1.1, 0, 2}};
  auto f = LoadFunction::smooth(
      [&](double x, double y) {
        double v = 0;
        for (const auto& t : poly) v += t.c * std::pow(x, t.a) * std::pow(y, t.b);
        return v;
      },
      "quadratic");
  const Vector load = assemble_load(mesh, f).values;
  for (int iy = 1; iy < mesh.nodes_per_side() - 1; ++iy)
    for (int ix = 1; ix < mesh.nodes_per_side() - 1; ++ix) {
      double expected = 0;
      for (const auto& t : poly) expected += t.c * moment(t.a, mesh.coordinate(ix)) * moment(t.b, mesh.coordinate(iy));
      CHECK(load[mesh.dof(ix, iy)] == doctest::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("nodal load is the mass matrix applied to the data") {
  const auto mesh = CartesianMesh::build(4);
  const Vector v = oracle::random_vector(mesh.dofs(), 3);
  const Vector load = assemble_load(mesh, LoadFunction::nodal(v)).values;
  CHECK((load - assemble_mass(mesh) * v).norm() == 0.0);
  CHECK_THROWS_AS(assemble_load(mesh, LoadFunction::nodal(Vector::Ones(3))), UsageError);
}

TEST_CASE("Galerkin consistency converges at second order") {
  std::vector<double> errors;
  for (int level = 3; level <= 6; ++level) {
    const auto mesh = CartesianMesh::build(level);
    const auto s = assemble_stiffness(mesh);
    const auto m = assemble_mass(mesh);
    const double pi = oracle::pi;
    auto f = LoadFunction::smooth(
        [pi](double x, double y) { return (1 + 2 * pi * pi) * std::sin(pi * x) * std::sin(pi * y); }, "manufactured");
    const Vector w = solve_shifted(s, m, 1.0, 1.0, assemble_load(mesh, f).values);
    Vector exact(mesh.dofs());
    for (int iy = 1; iy < mesh.nodes_per_side() - 1; ++iy)
      for (int ix = 1; ix < mesh.nodes_per_side() - 1; ++ix)
        exact[mesh.dof(ix, iy)] = std::sin(pi * mesh.coordinate(ix)) * std::sin(pi * mesh.coordinate(iy));
    errors.push_back(mass_norm(m, w - exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const auto coarse = CartesianMesh::build(int(i) + 2);
    const auto fine = CartesianMesh::build(int(i) + 3);
    const double order = std::log(errors[i - 1] / errors[i]) / std::log(coarse.h() / fine.h());
    CHECK(order == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("coordinate export") {
  const auto mesh = CartesianMesh::build(2);
  std::ostringstream out;
  write_coordinate(out, assemble_stiffness(mesh));
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("%%MatrixMarket", 0) == 0);
  Index rows, cols, nnz;
  in >> rows >> cols >> nnz;
  CHECK(rows == 4);
  CHECK(nnz == 16);
  int r, c;
  double v;
  in >> r >> c >> v;
  CHECK(r == 1);
  CHECK(c == 1);
  CHECK(v == doctest::Approx(8.0 / 3.0).epsilon(1e-16));
}
