#include "doctest.h"
#include "oracles.hpp"

#include "fracsolve/kato.hpp"
#include "fracsolve/quaderror.hpp"
#include "fracsolve/testcases.hpp"

#include <sstream>

using namespace fracsolve;

namespace {

struct Problem {
  CartesianMesh mesh;
  SparseSymMatrix s;
  SparseSymMatrix m;
  KatoSolver solver;
  SpdFactorization mass;
  explicit Problem(int level)
      : mesh(CartesianMesh::build(level)),
        s(assemble_stiffness(mesh)),
        m(assemble_mass(mesh)),
        solver(s, m),
        mass(m) {}
  double C2() const { return 1 / oracle::lambda_min_SM(mesh); }
  SpectralIntervals intervals() const {
    return SpectralIntervals::from_constants(1 / oracle::lambda_max_SM(mesh), C2());
  }
};

// The sine load is gamma * M * phi with phi the nodal (1,1) mode, an exact
// pencil eigenvector with eigenvalue lambda_h.
double sine_gamma(const CartesianMesh& mesh) {
  const double t = oracle::pi * mesh.h();
  const double g = 6 * (1 - std::cos(t)) / (t * t * (2 + std::cos(t)));
  return g * g;
}

}  // namespace

TEST_CASE("beta0") {
  CHECK(beta0(0.5) == doctest::Approx(2 / oracle::pi).epsilon(1e-15));
  CHECK(beta0(1e-12) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(beta0(1e-5) == doctest::Approx(std::sin(oracle::pi * 1e-5) / (oracle::pi * 1e-5)).epsilon(1e-15));
  CHECK(beta0(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  for (int i = 1; i < 1000; ++i) {
    const double s = i / 1000.0;
    CHECK(beta0(1 - s) + beta0(s) <= 4 / oracle::pi + 1e-15);
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(KatoConfig{.s = 0.5}.validate());
  CHECK_THROWS_AS(KatoConfig{.s = 1.5}.validate(), UsageError);
  CHECK_THROWS_AS(KatoConfig{.s = 1e-4}.validate(), UsageError);
  CHECK_THROWS_AS((KatoConfig{.s = 0.5, .m_minus = 3, .m_plus = 0}.validate()), UsageError);
  const KatoConfig c{.s = 0.3};
  CHECK(c.s_minus() + c.s_plus() == 1.0);
  CHECK(c.s_plus() == 0.3);
}

TEST_CASE("w solves") {
  Problem p(6);
  const Vector f = assemble_load(p.mesh, LoadFunction::sine_product()).values;
  const Vector phi = EigenMode{1, 1}.nodal(p.mesh);
  const Vector w0 = p.solver.solve_w_minus(0.0, f);
  CHECK(mass_norm(p.m, w0 - phi / (2 * oracle::pi * oracle::pi + 1)) <= 0.5 * p.mesh.h() * p.mesh.h());
  CHECK((p.solver.solve_w_plus(0.0, f) - w0).norm() <= 1e-13 * w0.norm());

  const Vector s_inv = SpdFactorization(p.s).solve(f);
  CHECK((p.solver.solve_w_minus(60.0, f) - s_inv).norm() <= 1e-10 * s_inv.norm());
  const Vector m_inv = p.mass.solve(f);
  CHECK((p.solver.solve_w_plus(60.0, f) - m_inv).norm() <= 1e-10 * m_inv.norm());
  CHECK_THROWS_AS(p.solver.solve_w_minus(-1.0, f), UsageError);
}

TEST_CASE("w stability for random data") {
  Problem p(4);
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> ys(0.2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Vector f = oracle::random_vector(p.mesh.dofs(), 1000 + seed);
    const double fn = inverse_mass_norm(p.mass, f);
    const double y = ys(rng);
    CHECK(mass_norm(p.m, p.solver.solve_w_minus(y, f)) <= p.C2() * fn * (1 + 1e-10));
    CHECK(mass_norm(p.m, p.solver.solve_w_plus(y, f)) <= fn * (1 + 1e-10));
  }
}

TEST_CASE("GQ on the sine case at level 7") {
  Problem p(7);
  const double s = 0.5;
  QuadErrorEvaluator ev(p.intervals());
  const auto mt = ev.M_tilde(1e-6, s);
  const RulePair rules = make_rules(mt.minus, mt.plus);
  const Vector f = assemble_load(p.mesh, LoadFunction::sine_product()).values;
  const auto u = p.solver.solve_gq(s, rules, f);
  CHECK(u.solve_count == mt.total());

  const Vector phi = EigenMode{1, 1}.nodal(p.mesh);
  const double lh = oracle::lambda_min_SM(p.mesh);
  const double gamma = sine_gamma(p.mesh);
  const double exact_amp = std::pow(2 * oracle::pi * oracle::pi, -s);
  const double fem = std::abs(gamma * std::pow(lh, -s) - exact_amp) * mass_norm(p.m, phi);
  const double fn = inverse_mass_norm(p.mass, f);
  const double err = mass_norm(p.m, u.coefficients - exact_amp * phi);
  CHECK(err <= fem + 1e-6 * 4 / oracle::pi * fn);

  // Diagonalization: the vector error is the scalar error at lambda_h.
  const double amp = gamma * scalar_kato(lh, s, rules);
  CHECK((u.coefficients - amp * phi).norm() <= 1e-10 * u.coefficients.norm());
  const double bound = quadrature_error_bound(mt.minus, mt.plus, s, ev, fn);
  CHECK(mass_norm(p.m, u.coefficients - gamma * std::pow(lh, -s) * phi) <= bound);
}

TEST_CASE("applying s then 1-s on eigenmode data reproduces the classical solve") {
  Problem p(5);
  const Vector f = assemble_load(p.mesh, LoadFunction::sine_product()).values;
  const double s = 0.3;
  const RulePair first = make_rules(60, 120);
  const RulePair second = make_rules(120, 60);
  const Vector u1 = p.solver.solve_gq(s, first, f).coefficients;
  const Vector u2 = p.solver.solve_gq(1 - s, second, p.m * u1).coefficients;
  const Vector classical = SpdFactorization(p.s).solve(f);
  CHECK((u2 - classical).norm() <= 1e-6 * classical.norm());
}

TEST_CASE("discrete stability across s") {
  Problem p(4);
  const double fn_scale = 4 / oracle::pi * std::max(1.0, p.C2());
  QuadErrorEvaluator ev(p.intervals());
  for (const char* name : {"sine", "mixed", "bump"}) {
    const Vector f = assemble_load(p.mesh, LoadFunction::from_name(name)).values;
    const double fn = inverse_mass_norm(p.mass, f);
    for (double s : {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
      const auto mt = ev.M_tilde(1e-4, s, 8000);
      const auto u = p.solver.solve_gq(s, make_rules(mt.minus, mt.plus), f);
      CHECK(mass_norm(p.m, u.coefficients) <= fn_scale * fn);
    }
  }
}

TEST_CASE("sinc baseline") {
  Problem p(5);
  const Vector f = assemble_load(p.mesh, LoadFunction::sine_product()).values;
  const double s = 0.5;
  const Vector phi = EigenMode{1, 1}.nodal(p.mesh);
  const double target = sine_gamma(p.mesh) * std::pow(oracle::lambda_min_SM(p.mesh), -s);
  double previous = 1e300;
  for (int mp : {4, 16, 64}) {
    const auto rule = sinc_rule_from_count(s, mp);
    const auto u = p.solver.solve_sq(s, rule, f);
    CHECK(u.solve_count == rule.size());
    const double err = mass_norm(p.m, u.coefficients - target * phi);
    CHECK(err < previous);
    previous = err;
  }
  // Both rules converge to the same semi-discrete solution.
  const auto gq = p.solver.solve_gq(s, make_rules(60, 60), f).coefficients;
  double gap = 1e300;
  for (int mp : {100, 400, 1600}) {
    const auto sq = p.solver.solve_sq(s, sinc_rule_from_count(s, mp), f).coefficients;
    const double next = (sq - gq).norm() / gq.norm();
    CHECK(next < gap);
    gap = next;
  }
  // the remaining gap is the truncation error of the 60+60 Gauss-Laguerre rule
  CHECK(gap <= 1e-7);

  SincRule huge{0.5, 10, 1500};
  CHECK_THROWS_AS(p.solver.solve_sq(s, huge, f), NumericalError);
  SincRule empty{0.5, 0, 0};
  CHECK_THROWS_AS(p.solver.solve_sq(s, empty, f), UsageError);
}

TEST_CASE("scalar Kato partition identity") {
  for (int i = 1; i <= 9; ++i) {
    const double s = i / 10.0;
    const double v = beta0(1 - s) * reference_integral(1.0, 1 / (1 - s)) + beta0(s) * reference_integral(1.0, 1 / s);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const double t = 2 * oracle::pi * oracle::pi;
    QuadErrorEvaluator ev(SpectralIntervals::singleton(t));
    const auto mt = ev.M_tilde(1e-6, 0.5);
    const double v = scalar_kato(t, 0.5, make_rules(mt.minus, mt.plus));
    CHECK(std::abs(v - 0.2250790790392765) <= 1e-6);
  }
  {
    QuadErrorEvaluator ev(SpectralIntervals::singleton(1e4));
    const auto mt = ev.M_tilde(1e-6, 0.1);
    const double v = scalar_kato(1e4, 0.1, make_rules(mt.minus, mt.plus));
    const double bound = quadrature_error_bound(mt.minus, mt.plus, 0.1, ev, 1.0);
    CHECK(std::abs(v - std::pow(10.0, -0.4)) <= bound);
  }
  for (double t : {1e-2, 1.0, 1e4})
    for (int i = 1; i <= 9; ++i) {
      const double s = i / 10.0;
      QuadErrorEvaluator ev(SpectralIntervals::singleton(t));
      const RulePair rules = make_rules(12, 12);
      // For t < 1 the minus half attains the bound, so allow rounding slack.
      CHECK(std::abs(scalar_kato(t, s, rules) - std::pow(t, -s)) <= quadrature_error_bound(12, 12, s, ev, 1.0) * (1 + 1e-12));
    }
  CHECK_THROWS_AS(scalar_kato(0.0, 0.5, make_rules(2, 2)), UsageError);
}

TEST_CASE("error report and solution export") {
  ErrorReport r;
  r.method = "gq";
  r.s = 0.5;
  r.rbm_certificate = 1e-9;
  std::ostringstream out;
  r.write(out);
  CHECK(out.str().find("method=gq\n") != std::string::npos);
  CHECK(out.str().find("rbm_certificate=") != std::string::npos);
  CHECK(out.str().find("error_vs_exact") == std::string::npos);

  std::ostringstream sol;
  Vector u(2);
  u << 1.5, -2.0;
  write_solution(sol, 2, u);
  CHECK(sol.str() == "# level=2 dofs=2\n1.5\n-2\n");
}
