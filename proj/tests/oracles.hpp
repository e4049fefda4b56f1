#pragma once

// Closed-form references used by several test files.

#include "fracsolve/mesh_fem.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

// Generalized eigenvalue k (1-based) of the 1D P1 pencil on n-2 interior nodes.
inline double mu_1d(int k, int n) {
  const double h = 1.0 / (n - 1);
  const double theta = k * pi / (n - 1);
  return 6.0 / (h * h) * (1 - std::cos(theta)) / (2 + std::cos(theta));
}

inline double lambda_min_SM(const fracsolve::CartesianMesh& mesh) { return 2 * mu_1d(1, mesh.nodes_per_side()); }
inline double lambda_max_SM(const fracsolve::CartesianMesh& mesh) {
  const int n = mesh.nodes_per_side();
  return 2 * mu_1d(n - 2, n);
}
inline double lambda_min_M(const fracsolve::CartesianMesh& mesh) {
  const double h = mesh.h();
  const double m = h / 3 * (2 - std::cos(pi / (mesh.nodes_per_side() - 1)));
  return m * m;
}

inline fracsolve::Vector random_vector(fracsolve::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  fracsolve::Vector v(n);
  for (fracsolve::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace oracle
