#include "doctest.h"
#include "oracles.hpp"

#include "fracsolve/kato.hpp"
#include "fracsolve/testcases.hpp"

#include <cmath>

using namespace fracsolve;

namespace {

// Composite midpoint rule for the 1D factors of the bump coefficient.
double bump_factor_numeric(int n) {
  const int pieces = 200000;
  const double a = 0.25, b = 0.75, w = (b - a) / pieces;
  double sum = 0;
  for (int i = 0; i < pieces; ++i) sum += std::sin(n * oracle::pi * (a + (i + 0.5) * w));
  return sum * w;
}

}  // namespace

TEST_CASE("eigen modes") {
  const EigenMode mode{4, 10};
  CHECK(mode.lambda() == doctest::Approx(116 * oracle::pi * oracle::pi).epsilon(1e-15));
  CHECK(mode(0.125, 0.05) == doctest::Approx(std::sin(oracle::pi / 2) * std::sin(oracle::pi / 2)));

  // Nodal modes are exact pencil eigenvectors; the discrete eigenvalue
  // approaches the continuous one at second order.
  double previous_gap = 0, previous_h = 0;
  for (int level : {3, 4, 5, 6}) {
    const auto mesh = CartesianMesh::build(level);
    const auto s = assemble_stiffness(mesh);
    const auto m = assemble_mass(mesh);
    const EigenMode low{1, 2};
    const Vector phi = low.nodal(mesh);
    const double rq = s.quadratic_form(phi) / m.quadratic_form(phi);
    const int n = mesh.nodes_per_side();
    CHECK(rq == doctest::Approx(oracle::mu_1d(1, n) + oracle::mu_1d(2, n)).epsilon(1e-12));
    const double gap = rq - low.lambda();
    CHECK(gap > 0);
    CHECK(gap <= low.lambda() * low.lambda() * mesh.h() * mesh.h());
    if (previous_gap > 0) {
      const double h_ratio = previous_h / mesh.h();
      CHECK(previous_gap / gap == doctest::Approx(h_ratio * h_ratio).epsilon(0.1));
    }
    previous_gap = gap;
    previous_h = mesh.h();
  }
}

TEST_CASE("case registry") {
  CHECK(case_from_name("sine").kind == CaseKind::Sine);
  CHECK(case_from_name("mixed").kind == CaseKind::MixedModes);
  CHECK(case_from_name("bump").kind == CaseKind::SquareBump);
  CHECK_THROWS_AS(case_from_name("gaussian"), UsageError);
  CHECK(all_cases().size() == 3);
  CHECK_THROWS_AS(ExactSolution(case_from_name("sine"), 1.0), UsageError);
  CHECK_THROWS_AS(ExactSolution(case_from_name("sine"), 0.0), UsageError);
  CHECK(error_norm_from_name("nodal") == ErrorNorm::NodalMass);
  CHECK(error_norm_from_name("l2") == ErrorNorm::ContinuousL2);
  CHECK_THROWS_AS(error_norm_from_name("h1"), UsageError);
}

TEST_CASE("closed-form exact solutions") {
  const ExactSolution sine(case_from_name("sine"), 0.5);
  CHECK(sine(0.5, 0.5) == doctest::Approx(1 / std::sqrt(2 * oracle::pi * oracle::pi)).epsilon(1e-15));
  CHECK(sine(0.5, 0.5) == doctest::Approx(0.225079).epsilon(1e-6));
  CHECK(sine.tail_bound() == 0);

  const double s = 0.3;
  const ExactSolution mixed(case_from_name("mixed"), s);
  const double x = 0.37, y = 0.81;
  CHECK(mixed(x, y) == doctest::Approx(std::pow(116 * oracle::pi * oracle::pi, -s) * EigenMode{4, 10}(x, y))
                           .epsilon(1e-14));
}

TEST_CASE("square bump coefficients") {
  for (int m = 1; m <= 12; ++m) CHECK(bump_coefficient(2, m) == 0);
  for (int n : {1, 2, 3, 5, 6, 7, 9, 11, 13}) {
    const double numeric = bump_factor_numeric(n);
    for (int m : {1, 3, 7}) {
      const double expected = 4 * numeric * bump_factor_numeric(m);
      CHECK(std::abs(bump_coefficient(n, m) - expected) <= 1e-9 * std::abs(expected) + 1e-14);
    }
  }
  CHECK(std::abs(bump_factor_numeric(2)) < 1e-12);
  CHECK(bump_coefficient(1, 1) == doctest::Approx(8 / (oracle::pi * oracle::pi)).epsilon(1e-15));
  CHECK_THROWS_AS(bump_coefficient(0, 1), UsageError);
}

TEST_CASE("square bump tail bound dominates the dropped terms") {
  // ||sum c phi||^2 = sum c^2 lambda^{-2s} / 4 for the unnormalized sines.
  const int terms = 40;
  const int far = 4000;
  for (double s : {0.1, 0.5, 0.9}) {
    double tail_sq = 0;
    for (int n = 1; n <= far; n += 2)
      for (int m = 1; m <= far; m += 2) {
        if (n <= terms && m <= terms) continue;
        const double c = bump_coefficient(n, m) * std::pow(EigenMode{n, m}.lambda(), -s);
        tail_sq += c * c / 4;
      }
    const double bound = bump_tail_bound(s, terms);
    CHECK(std::sqrt(tail_sq) <= bound);
    CHECK(bound <= 3 * std::sqrt(tail_sq));
  }
  CHECK(bump_tail_bound(0.5, 400) < bump_tail_bound(0.5, 100));
  CHECK(bump_tail_bound(0.9, 400) < bump_tail_bound(0.1, 400));
}

TEST_CASE("square bump series evaluation") {
  const ExactSolution bump(case_from_name("bump"), 0.4, 101);
  const std::vector<double> xs = {0.1, 0.5, 0.6}, ys = {0.3, 0.5};
  const DenseMatrix grid = bump.on_grid(xs, ys);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) CHECK(grid(Index(i), Index(j)) == doctest::Approx(bump(xs[i], ys[j])));
  // Symmetry of the square about its centre lines.
  CHECK(bump(0.3, 0.2) == doctest::Approx(bump(0.7, 0.2)).epsilon(1e-12));
  CHECK(bump(0.3, 0.2) == doctest::Approx(bump(0.2, 0.3)).epsilon(1e-12));
  CHECK(bump(0.5, 0.5) > bump(0.2, 0.2));
  CHECK(bump(0.5, 0.5) > 0);
  CHECK(bump.tail_bound() == doctest::Approx(bump_tail_bound(0.4, 101)));
}

TEST_CASE("error norms") {
  const auto mesh = CartesianMesh::build(5);
  const auto m = assemble_mass(mesh);
  const ExactSolution sine(case_from_name("sine"), 0.2);
  const Vector interp = sine.nodal(mesh);
  CHECK(l2_error(mesh, m, interp, sine, ErrorNorm::NodalMass) == 0);

  // Interpolation error of a smooth function in L2 is O(h^2).
  const double e5 = l2_error(mesh, m, interp, sine, ErrorNorm::ContinuousL2);
  const auto fine = CartesianMesh::build(6);
  const double e6 =
      l2_error(fine, assemble_mass(fine), sine.nodal(fine), sine, ErrorNorm::ContinuousL2);
  CHECK(e5 > 0);
  CHECK(e5 / e6 == doctest::Approx(std::pow(mesh.h() / fine.h(), 2)).epsilon(0.05));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Vector v = oracle::random_vector(mesh.dofs(), seed);
    CHECK(l2_error(mesh, m, v, sine, ErrorNorm::NodalMass) >= 0);
    CHECK(l2_error(mesh, m, v, sine, ErrorNorm::ContinuousL2) >= 0);
  }
  CHECK_THROWS_AS(l2_error(mesh, m, Vector::Zero(3), sine, ErrorNorm::NodalMass), UsageError);
}

TEST_CASE("fractional solution converges at second order") {
  const double s = 0.5;
  const ExactSolution exact(case_from_name("sine"), s);
  const RulePair rules = make_rules(80, 80);
  std::vector<double> nodal, continuous;
  for (int level : {3, 4, 5, 6}) {
    const auto mesh = CartesianMesh::build(level);
    const auto st = assemble_stiffness(mesh);
    const auto m = assemble_mass(mesh);
    const KatoSolver solver(st, m);
    const Vector f = assemble_load(mesh, LoadFunction::sine_product()).values;
    const Vector u = solver.solve_gq(s, rules, f).coefficients;
    nodal.push_back(l2_error(mesh, m, u, exact, ErrorNorm::NodalMass));
    continuous.push_back(l2_error(mesh, m, u, exact, ErrorNorm::ContinuousL2));
  }
  for (std::size_t i = 1; i < nodal.size(); ++i) {
    const double h_ratio = (std::pow(2.0, 3 + int(i)) - 1) / (std::pow(2.0, 2 + int(i)) - 1);
    CHECK(std::log(continuous[i - 1] / continuous[i]) / std::log(h_ratio) == doctest::Approx(2).epsilon(0.15));
    CHECK(std::log(nodal[i - 1] / nodal[i]) / std::log(h_ratio) == doctest::Approx(2).epsilon(0.15));
  }
}

TEST_CASE("discrete fractional eigen-relation") {
  const auto mesh = CartesianMesh::build(5);
  const auto st = assemble_stiffness(mesh);
  const auto m = assemble_mass(mesh);
  const KatoSolver solver(st, m);
  const int n = mesh.nodes_per_side();
  const RulePair rules = make_rules(30, 40);
  for (const EigenMode mode : {EigenMode{1, 1}, EigenMode{2, 3}, EigenMode{4, 10}}) {
    const Vector phi = mode.nodal(mesh);
    const Vector f = m * phi;
    const double lambda_h = oracle::mu_1d(mode.n, n) + oracle::mu_1d(mode.m, n);
    for (double s : {0.2, 0.7}) {
      const Vector u = solver.solve_gq(s, rules, f).coefficients;
      const double factor = scalar_kato(lambda_h, s, rules);
      CHECK((u - factor * phi).norm() <= 1e-10 * factor * phi.norm());
      // The quadrature value itself tracks lambda_h^{-s}.
      CHECK(factor == doctest::Approx(std::pow(lambda_h, -s)).epsilon(1e-3));
    }
  }
}
