#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace fracsolve {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Error taxonomy. Usage errors map to CLI exit code 2, numerical failures
// to 3, violated certificates to 4.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CertificateViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Number of workers for embarrassingly parallel loops. Honors the
// FRACSOLVE_THREADS environment variable as an upper cap.
unsigned worker_count();

// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
// worker gets a stable id in [0, workers) passed as the second argument.
// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t, unsigned)>& body);

}  // namespace fracsolve
