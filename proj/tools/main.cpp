// fracsolve: command-line driver for the spectral fractional Laplacian
// solver on the unit square. Every study writes CSV with a versioned
// header comment; files are written to a temporary name and renamed.
//
// Exit codes: 0 success, 2 usage, 3 numerical failure, 4 certificate
// violation.

#include "fracsolve/kato.hpp"
#include "fracsolve/linalg.hpp"
#include "fracsolve/mesh_fem.hpp"
#include "fracsolve/quaderror.hpp"
#include "fracsolve/quadrature.hpp"
#include "fracsolve/rbm.hpp"
#include "fracsolve/testcases.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fracsolve;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw NumericalError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Mesh, matrices, load, spectral constants and the shifted solver for one
// (case, level) pair.
struct Truth {
  ManufacturedCase problem;
  CartesianMesh mesh;
  SparseSymMatrix s;
  SparseSymMatrix m;
  Vector f;
  SpectralBounds bounds;
  double load_norm = 0;
  std::unique_ptr<KatoSolver> solver;
  double assembly_seconds = 0;
  double factorization_seconds = 0;

  Truth(const std::string& case_name, int level)
      : problem(case_from_name(case_name)), mesh(CartesianMesh::build(level)) {
    auto t0 = Clock::now();
    s = assemble_stiffness(mesh);
    m = assemble_mass(mesh);
    f = assemble_load(mesh, problem.load()).values;
    assembly_seconds = seconds_since(t0);
    t0 = Clock::now();
    bounds = extremal_generalized_eigs(s, m);
    load_norm = inverse_mass_norm(SpdFactorization(m), f);
    solver = std::make_unique<KatoSolver>(s, m);
    factorization_seconds = seconds_since(t0);
  }

  SpectralIntervals intervals() const { return SpectralIntervals::from_bounds(bounds); }
};

// "--M auto" or a total node count split as M+ = round(M (1 - s)).
struct PointCount {
  bool automatic = true;
  int total = 0;
  int plus(double s) const { return std::max(1, int(std::lround(total * (1 - s)))); }
  int minus(double s) const { return std::max(1, total - plus(s)); }
};

PointCount parse_point_count(const std::string& text) {
  if (text == "auto") return {};
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used == text.size() && value >= 2) return {false, value};
  } catch (const std::exception&) {
  }
  throw UsageError("--M expects 'auto' or an integer >= 2, got '" + text + "'");
}

SincRule sinc_for(const PointCount& count, double s, Index dofs) {
  return count.automatic ? sinc_rule(s, double(dofs)) : sinc_rule_from_count(s, count.plus(s));
}

MTilde gq_counts(const PointCount& count, double s, double delta, QuadErrorEvaluator& evaluator, int cap) {
  if (count.automatic) return evaluator.M_tilde(delta, s, cap);
  MTilde out;
  out.minus = count.minus(s);
  out.plus = count.plus(s);
  return out;
}

std::string model_path(const std::string& prefix, Sigma sigma) { return prefix + "." + sigma_name(sigma) + ".rbm"; }

double dense_sup_delta(const RbmModel& model) {
  double sup = 0;
  for (int i = 0; i <= 4096; ++i) sup = std::max(sup, reduced_solve_z(model, i / 4096.0).delta);
  return sup;
}

// ---------------------------------------------------------------------------

struct SolveOptions {
  std::string case_name = "sine";
  double s = 0.5;
  int level = 6;
  std::string method = "gq";
  std::string points = "auto";
  double delta = 1e-4;
  int cap = 2000;
  std::string norm = "nodal";
  std::string model;
  bool verify = false;
  std::string out = "out";
};

int cmd_solve(const SolveOptions& o) {
  const auto start = Clock::now();
  KatoConfig{.s = o.s, .kind = o.method == "sq" ? QuadratureKind::SQ : QuadratureKind::GQ, .delta = o.delta}.validate();
  const PointCount count = parse_point_count(o.points);
  const ErrorNorm norm = error_norm_from_name(o.norm);
  if (o.method == "rbm" && o.model.empty()) throw UsageError("--method rbm needs --model <prefix>");
  if (o.method != "rbm" && !o.model.empty()) throw UsageError("--model only applies to --method rbm");
  if (o.verify && o.method != "rbm") throw UsageError("--verify only applies to --method rbm");

  std::optional<RbmModel> minus, plus;
  int level = o.level;
  if (o.method == "rbm") {
    minus = load_model(model_path(o.model, Sigma::Minus));
    plus = load_model(model_path(o.model, Sigma::Plus), minus->truth_dim);
    if (minus->sigma != Sigma::Minus || plus->sigma != Sigma::Plus) throw NumericalError("model files swapped");
    level = minus->mesh_level;
  }

  Truth truth(o.case_name, level);
  if (minus && minus->truth_dim != truth.mesh.dofs())
    throw NumericalError("model truth dimension does not match the mesh");

  ErrorReport report;
  report.method = o.method;
  report.s = o.s;
  report.level = level;
  report.load_norm = truth.load_norm;
  report.C2 = truth.bounds.C2();
  report.K2 = truth.bounds.K2();
  report.lambda_min_M = truth.bounds.lambda_min_M;
  report.stability_bound = stability_bound(report.C2, truth.load_norm);
  report.timing.assembly = truth.assembly_seconds;
  report.timing.factorization = truth.factorization_seconds;

  Vector u;
  auto t0 = Clock::now();
  if (o.method == "sq") {
    const SincRule rule = sinc_for(count, o.s, truth.mesh.dofs());
    report.m_minus = rule.m_minus;
    report.m_plus = rule.m_plus;
    report.timing.rules = seconds_since(t0);
    const auto sol = truth.solver->solve_sq(o.s, rule, truth.f);
    u = sol.coefficients;
    report.solve_count = sol.solve_count;
    report.timing.solves = sol.seconds;
  } else {
    QuadErrorEvaluator evaluator(truth.intervals());
    const MTilde mt = gq_counts(count, o.s, o.delta, evaluator, o.cap);
    report.m_minus = mt.minus;
    report.m_plus = mt.plus;
    report.G_minus = evaluator.G_minus(mt.minus, o.s);
    report.G_plus = evaluator.G_plus(mt.plus, o.s);
    report.quadrature_bound =
        quadrature_error_bound(report.G_minus, report.G_plus, truth.intervals().C2_tilde(), truth.load_norm);
    const RulePair rules{*evaluator.rule(mt.minus), *evaluator.rule(mt.plus)};
    report.timing.rules = seconds_since(t0);
    if (o.method == "gq") {
      const auto sol = truth.solver->solve_gq(o.s, rules, truth.f);
      u = sol.coefficients;
      report.solve_count = sol.solve_count;
      report.timing.solves = sol.seconds;
    } else {
      const auto sol = rbm_solve_fractional(*minus, *plus, o.s, rules);
      u = sol.coefficients;
      report.rbm_certificate = sol.certificate;
      report.solve_count = 0;
      report.timing.solves = sol.seconds;
    }
  }
  if (report.solve_count > 0) report.timing.per_solve = report.timing.solves / report.solve_count;
  report.solution_norm = mass_norm(truth.m, u);
  report.error_vs_exact = l2_error(truth.mesh, truth.m, u, ExactSolution(truth.problem, o.s), norm);
  report.timing.total = seconds_since(start);

  std::optional<double> rbm_error;
  if (o.verify) {
    const RulePair rules = make_rules(report.m_minus, report.m_plus);
    rbm_error = mass_norm(truth.m, truth.solver->solve_gq(o.s, rules, truth.f).coefficients - u);
  }

  const fs::path dir(o.out);
  write_atomic(dir / "solution.txt", [&](std::ostream& out) { write_solution(out, level, u); });
  write_atomic(dir / "report.txt", [&](std::ostream& out) {
    report.write(out);
    out << "error_norm=" << error_norm_name(norm) << '\n';
    if (rbm_error) out << "rbm_error_vs_truth=" << *rbm_error << '\n';
  });

  std::cout << std::setprecision(6) << o.method << " s=" << o.s << " level=" << level << " M-=" << report.m_minus
            << " M+=" << report.m_plus << " error(" << error_norm_name(norm) << ")=" << *report.error_vs_exact;
  if (report.rbm_certificate) std::cout << " certificate=" << *report.rbm_certificate;
  std::cout << " total=" << report.timing.total << "s\n";

  if (!report.stable()) throw CertificateViolation("solution norm exceeds the stability bound");
  if (rbm_error && *rbm_error > *report.rbm_certificate)
    throw CertificateViolation("RBM error against the truth solve exceeds the certificate");
  return 0;
}

// ---------------------------------------------------------------------------

struct HconvOptions {
  std::string case_name = "sine";
  double s = 0.2;
  int min_level = 3;
  int max_level = 7;
  double delta = 1e-8;
  int cap = 4000;
  std::string out = "hconv.csv";
};

int cmd_hconv(const HconvOptions& o) {
  KatoConfig{.s = o.s, .delta = o.delta}.validate();
  if (o.min_level > o.max_level) throw UsageError("--min-level exceeds --max-level");
  struct Row {
    int level;
    double h;
    std::string method;
    int m_minus, m_plus, solves;
    double l2, nodal;
  };
  std::vector<Row> rows;
  for (int level = o.min_level; level <= o.max_level; ++level) {
    Truth truth(o.case_name, level);
    const ExactSolution exact(truth.problem, o.s);
    auto record = [&](const std::string& method, int mm, int mp, const FractionalSolution& sol) {
      rows.push_back({level, truth.mesh.h(), method, mm, mp, sol.solve_count,
                      l2_error(truth.mesh, truth.m, sol.coefficients, exact, ErrorNorm::ContinuousL2),
                      l2_error(truth.mesh, truth.m, sol.coefficients, exact, ErrorNorm::NodalMass)});
      const Row& r = rows.back();
      std::cout << "level " << level << ' ' << method << " M-=" << mm << " M+=" << mp << " l2=" << r.l2
                << " nodal=" << r.nodal << '\n';
    };
    QuadErrorEvaluator evaluator(truth.intervals());
    const MTilde mt = evaluator.M_tilde(o.delta, o.s, o.cap);
    record("gq", mt.minus, mt.plus,
           truth.solver->solve_gq(o.s, {*evaluator.rule(mt.minus), *evaluator.rule(mt.plus)}, truth.f));
    const SincRule sinc = sinc_rule(o.s, double(truth.mesh.dofs()));
    record("sq", sinc.m_minus, sinc.m_plus, truth.solver->solve_sq(o.s, sinc, truth.f));
  }
  write_atomic(o.out, [&](std::ostream& out) {
    out << "# fracsolve hconv v1 case=" << o.case_name << " s=" << o.s << " delta=" << o.delta << '\n'
        << "level,h,method,M_minus,M_plus,solves,l2_error,nodal_error\n"
        << std::setprecision(12);
    for (const Row& r : rows)
      out << r.level << ',' << r.h << ',' << r.method << ',' << r.m_minus << ',' << r.m_plus << ',' << r.solves
          << ',' << r.l2 << ',' << r.nodal << '\n';
  });
  return 0;
}

// ---------------------------------------------------------------------------

struct QuadstudyOptions {
  std::string case_name = "sine";
  int level = 5;
  std::vector<double> s_values = {0.2, 0.5};
  int m_min = 4;
  int m_max = 120;
  int m_step = 4;
  double reference_delta = 1e-12;
  int cap = 8000;
  std::string out = "quadstudy.csv";
};

int cmd_quadstudy(const QuadstudyOptions& o) {
  if (o.m_min < 2 || o.m_step < 1 || o.m_max < o.m_min) throw UsageError("bad M sweep range");
  for (double s : o.s_values) KatoConfig{.s = s}.validate();
  Truth truth(o.case_name, o.level);
  QuadErrorEvaluator evaluator(truth.intervals());
  std::ostringstream body;
  body << std::setprecision(12);
  for (double s : o.s_values) {
    const ExactSolution exact(truth.problem, s);
    const MTilde ref_counts = evaluator.M_tilde(o.reference_delta, s, o.cap);
    const Vector reference =
        truth.solver
            ->solve_gq(s, {*evaluator.rule(ref_counts.minus), *evaluator.rule(ref_counts.plus)}, truth.f)
            .coefficients;
    for (int total = o.m_min; total <= o.m_max; total += o.m_step) {
      // A fresh rule per M, as in the study being reproduced.
      const PointCount count{false, total};
      const RulePair rules = make_rules(count.minus(s), count.plus(s));
      const SincRule sinc = sinc_rule_from_count(s, count.plus(s));
      const Vector gq = truth.solver->solve_gq(s, rules, truth.f).coefficients;
      const Vector sq = truth.solver->solve_sq(s, sinc, truth.f).coefficients;
      for (const auto& [method, u, mm, mp] :
           {std::tuple<const char*, const Vector&, int, int>{"gq", gq, rules.minus.size(), rules.plus.size()},
            std::tuple<const char*, const Vector&, int, int>{"sq", sq, sinc.m_minus, sinc.m_plus}}) {
        body << mm + mp << ',' << method << ',' << s << ',' << mm << ',' << mp << ','
             << mass_norm(truth.m, u - reference) << ','
             << l2_error(truth.mesh, truth.m, u, exact, ErrorNorm::NodalMass) << '\n';
      }
    }
    std::cout << "s=" << s << " done (reference M-=" << ref_counts.minus << " M+=" << ref_counts.plus << ")\n";
  }
  write_atomic(o.out, [&](std::ostream& out) {
    out << "# fracsolve quadstudy v1 case=" << o.case_name << " level=" << o.level
        << " reference_delta=" << o.reference_delta << '\n'
        << "M,method,s,M_minus,M_plus,error_vs_reference,error_vs_exact\n"
        << body.str();
  });
  return 0;
}

// ---------------------------------------------------------------------------

struct GsurfaceOptions {
  double C2 = 2;
  double K2 = 1e-6;
  int level = 0;
  int m_max = 100;
  std::vector<double> s_values = {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> deltas = {1e-2, 1e-4, 1e-6};
  int cap = 16000;
  std::string out = "gsurface";
};

int cmd_gsurface(const GsurfaceOptions& o) {
  for (double s : o.s_values) KatoConfig{.s = s}.validate();
  SpectralIntervals intervals = SpectralIntervals::from_constants(o.K2, o.C2);
  if (o.level > 0) {
    const auto mesh = CartesianMesh::build(o.level);
    intervals = SpectralIntervals::from_bounds(extremal_generalized_eigs(assemble_stiffness(mesh), assemble_mass(mesh)));
  }
  QuadErrorEvaluator evaluator(intervals);
  std::vector<ErrorSurfaceRow> surface;
  for (double s : o.s_values)
    for (int m = 1; m <= o.m_max; ++m) {
      const GPair g = evaluator.G_pm(m, s);
      surface.push_back({m, s, g.minus, g.plus});
    }
  std::vector<MTildeRow> table;
  for (double delta : o.deltas)
    for (double s : o.s_values) {
      const MTilde mt = evaluator.M_tilde(delta, s, o.cap);
      table.push_back({delta, s, mt.minus, mt.plus});
      std::cout << "delta=" << delta << " s=" << s << " M~-=" << mt.minus << " M~+=" << mt.plus << '\n';
    }
  write_atomic(o.out + ".gsurface.csv", [&](std::ostream& out) { write_error_surface(out, surface, intervals); });
  write_atomic(o.out + ".mtilde.csv", [&](std::ostream& out) { write_mtilde_table(out, table, intervals); });
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string case_name = "sine";
  int level = 6;
  double tol = 1e-8;
  int max_basis = 100;
  int grid = 128;
  std::optional<std::uint64_t> seed;
  bool refine_grid = false;
  std::string out = "model";
};

struct TrainedPair {
  RbmModel minus;
  RbmModel plus;
  double seconds = 0;
};

TrainedPair train_pair(const Truth& truth, const TrainOptions& o) {
  GreedyConfig config;
  config.tol = o.tol;
  config.max_basis = o.max_basis;
  config.grid_size = o.grid;
  config.random_first_seed = o.seed;
  config.refine_grid = o.refine_grid;
  const auto t0 = Clock::now();
  TrainedPair out{
      greedy_train(Sigma::Minus, *truth.solver, truth.s, truth.m, truth.f, truth.bounds, truth.mesh.level(), config),
      greedy_train(Sigma::Plus, *truth.solver, truth.s, truth.m, truth.f, truth.bounds, truth.mesh.level(), config)};
  out.seconds = seconds_since(t0);
  return out;
}

int cmd_rbm_train(const TrainOptions& o) {
  Truth truth(o.case_name, o.level);
  const TrainedPair pair = train_pair(truth, o);
  if (const fs::path dir = fs::path(o.out).parent_path(); !dir.empty()) fs::create_directories(dir);
  for (const RbmModel* model : {&pair.minus, &pair.plus}) {
    save_model(*model, model_path(o.out, model->sigma));
    std::cout << sigma_name(model->sigma) << ": N=" << model->dimension() << " grid sup=" << model->history.back()
              << " dense sup=" << dense_sup_delta(*model) << (model->stagnated ? " (stagnated)" : "") << '\n';
  }
  write_atomic(o.out + ".history.csv", [&](std::ostream& out) {
    out << "# fracsolve rbm-history v1 case=" << o.case_name << " level=" << o.level << " tol=" << o.tol
        << " offline_seconds=" << pair.seconds << '\n'
        << "sigma,n,sup_delta\n"
        << std::setprecision(12);
    for (const RbmModel* model : {&pair.minus, &pair.plus})
      for (std::size_t n = 0; n < model->history.size(); ++n)
        out << sigma_name(model->sigma) << ',' << n << ',' << model->history[n] << '\n';
  });
  return 0;
}

// ---------------------------------------------------------------------------

struct TimingOptions {
  TrainOptions train;
  int queries = 100;
  double delta = 1e-4;
  std::uint64_t seed = 7;
  std::string out = "timing.csv";
};

int cmd_timing(const TimingOptions& o) {
  if (o.queries < 1) throw UsageError("--queries must be positive");
  Truth truth(o.train.case_name, o.train.level);
  const TrainedPair pair = train_pair(truth, o.train);
  std::cout << "offline: " << pair.seconds << " s, N-=" << pair.minus.dimension() << " N+=" << pair.plus.dimension()
            << '\n';
  QuadErrorEvaluator evaluator(truth.intervals());
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> draw(0.05, 0.95);
  double gq_total = 0, rbm_total = pair.seconds;
  bool violated = false;
  std::ostringstream body;
  body << std::setprecision(10);
  for (int q = 1; q <= o.queries; ++q) {
    const double s = draw(rng);
    const MTilde mt = evaluator.M_tilde(o.delta, s);
    const RulePair rules{*evaluator.rule(mt.minus), *evaluator.rule(mt.plus)};
    const auto gq = truth.solver->solve_gq(s, rules, truth.f);
    const auto rbm = rbm_solve_fractional(pair.minus, pair.plus, s, rules);
    gq_total += gq.seconds;
    rbm_total += rbm.seconds;
    const double err = mass_norm(truth.m, gq.coefficients - rbm.coefficients);
    violated = violated || err > rbm.certificate;
    body << q << ',' << s << ',' << mt.minus << ',' << mt.plus << ',' << gq.seconds << ',' << gq_total << ','
         << rbm.seconds << ',' << rbm_total << ',' << err << ',' << rbm.certificate << '\n';
  }
  write_atomic(o.out, [&](std::ostream& out) {
    out << "# fracsolve timing v1 case=" << o.train.case_name << " level=" << o.train.level << " delta=" << o.delta
        << " offline_seconds=" << pair.seconds << '\n'
        << "query,s,M_minus,M_plus,gq_seconds,gq_cumulative,rbm_seconds,rbm_cumulative,rbm_error,certificate\n"
        << body.str();
  });
  std::cout << "GQ cumulative " << gq_total << " s, RBM cumulative (offline included) " << rbm_total << " s\n";
  if (violated) throw CertificateViolation("RBM error exceeded its certificate in at least one query");
  return 0;
}

void add_case(CLI::App* app, std::string& target) {
  app->add_option("--case", target, "Manufactured case")
      ->check(CLI::IsMember({"sine", "mixed", "bump"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified spectral fractional Laplacian solver on the unit square"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one fractional problem and write the solution and error report");
  add_case(solve_cmd, solve.case_name);
  solve_cmd->add_option("--s", solve.s, "Fractional order in (0, 1)")->capture_default_str();
  solve_cmd->add_option("--level", solve.level, "Mesh level K (2^K points per side)")->capture_default_str();
  solve_cmd->add_option("--method", solve.method)->check(CLI::IsMember({"gq", "sq", "rbm"}))->capture_default_str();
  solve_cmd->add_option("--M", solve.points, "auto, or total quadrature nodes")->capture_default_str();
  solve_cmd->add_option("--delta", solve.delta, "Quadrature tolerance for --M auto")->capture_default_str();
  solve_cmd->add_option("--cap", solve.cap, "Largest Gauss-Laguerre size searched")->capture_default_str();
  solve_cmd->add_option("--norm", solve.norm, "nodal or l2")->capture_default_str();
  solve_cmd->add_option("--model", solve.model, "RBM model prefix (rbm only)");
  solve_cmd->add_flag("--verify", solve.verify, "Compare the RBM solution with a truth GQ solve");
  solve_cmd->add_option("--out", solve.out, "Output directory")->capture_default_str();

  SolveOptions rbm_solve;
  rbm_solve.method = "rbm";
  auto* rbm_solve_cmd = app.add_subcommand("rbm-solve", "Online RBM fractional solve from trained models");
  add_case(rbm_solve_cmd, rbm_solve.case_name);
  rbm_solve_cmd->add_option("--model", rbm_solve.model, "Model prefix")->required();
  rbm_solve_cmd->add_option("--s", rbm_solve.s)->capture_default_str();
  rbm_solve_cmd->add_option("--M", rbm_solve.points)->capture_default_str();
  rbm_solve_cmd->add_option("--delta", rbm_solve.delta)->capture_default_str();
  rbm_solve_cmd->add_option("--norm", rbm_solve.norm)->capture_default_str();
  rbm_solve_cmd->add_flag("--verify", rbm_solve.verify);
  rbm_solve_cmd->add_option("--out", rbm_solve.out)->capture_default_str();

  HconvOptions hconv;
  auto* hconv_cmd = app.add_subcommand("hconv", "GQ and SQ errors under mesh refinement");
  add_case(hconv_cmd, hconv.case_name);
  hconv_cmd->add_option("--s", hconv.s)->capture_default_str();
  hconv_cmd->add_option("--min-level", hconv.min_level)->capture_default_str();
  hconv_cmd->add_option("--max-level", hconv.max_level)->capture_default_str();
  hconv_cmd->add_option("--delta", hconv.delta, "GQ tolerance for M~")->capture_default_str();
  hconv_cmd->add_option("--cap", hconv.cap)->capture_default_str();
  hconv_cmd->add_option("--out", hconv.out)->capture_default_str();

  QuadstudyOptions quad;
  auto* quad_cmd = app.add_subcommand("quadstudy", "Error against quadrature node count for GQ and SQ");
  add_case(quad_cmd, quad.case_name);
  quad_cmd->add_option("--level", quad.level)->capture_default_str();
  quad_cmd->add_option("--s", quad.s_values)->capture_default_str();
  quad_cmd->add_option("--m-min", quad.m_min)->capture_default_str();
  quad_cmd->add_option("--m-max", quad.m_max)->capture_default_str();
  quad_cmd->add_option("--m-step", quad.m_step)->capture_default_str();
  quad_cmd->add_option("--reference-delta", quad.reference_delta)->capture_default_str();
  quad_cmd->add_option("--out", quad.out)->capture_default_str();

  GsurfaceOptions gs;
  auto* gs_cmd = app.add_subcommand("gsurface", "G+- surface and M~ tables");
  gs_cmd->add_option("--C2", gs.C2, "C_N^2 of the synthetic intervals")->capture_default_str();
  gs_cmd->add_option("--K2", gs.K2, "K_N^2 of the synthetic intervals")->capture_default_str();
  gs_cmd->add_option("--level", gs.level, "Use the mesh constants of this level instead");
  gs_cmd->add_option("--m-max", gs.m_max)->capture_default_str();
  gs_cmd->add_option("--s", gs.s_values)->capture_default_str();
  gs_cmd->add_option("--delta", gs.deltas)->capture_default_str();
  gs_cmd->add_option("--cap", gs.cap)->capture_default_str();
  gs_cmd->add_option("--out", gs.out, "Output prefix")->capture_default_str();

  TrainOptions train;
  auto add_train = [](CLI::App* cmd, TrainOptions& t) {
    add_case(cmd, t.case_name);
    cmd->add_option("--level", t.level)->capture_default_str();
    cmd->add_option("--tol", t.tol)->capture_default_str();
    cmd->add_option("--max-basis", t.max_basis)->capture_default_str();
    cmd->add_option("--grid", t.grid, "Training grid size in z")->capture_default_str();
    cmd->add_option("--seed", t.seed, "Random first snapshot instead of the grid median");
    cmd->add_flag("--refine-grid", t.refine_grid, "Densify the training grid toward z = 0 and between points");
  };
  auto* train_cmd = app.add_subcommand("rbm-train", "Greedy training of both RBM models");
  add_train(train_cmd, train);
  train_cmd->add_option("--out", train.out, "Model prefix")->capture_default_str();

  TimingOptions timing;
  auto* timing_cmd = app.add_subcommand("timing", "Cumulative cost of repeated queries, GQ against RBM");
  add_train(timing_cmd, timing.train);
  timing_cmd->add_option("--queries", timing.queries)->capture_default_str();
  timing_cmd->add_option("--delta", timing.delta)->capture_default_str();
  timing_cmd->add_option("--query-seed", timing.seed)->capture_default_str();
  timing_cmd->add_option("--out", timing.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve);
    if (*rbm_solve_cmd) return cmd_solve(rbm_solve);
    if (*hconv_cmd) return cmd_hconv(hconv);
    if (*quad_cmd) return cmd_quadstudy(quad);
    if (*gs_cmd) return cmd_gsurface(gs);
    if (*train_cmd) return cmd_rbm_train(train);
    if (*timing_cmd) return cmd_timing(timing);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const CertificateViolation& e) {
    std::cerr << "certificate violation: " << e.what() << '\n';
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
