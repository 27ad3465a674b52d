#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "chamberwalk/rational.hpp"

namespace chamberwalk::linalg {

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solves A X = B exactly by Gauss-Jordan elimination. A must be square and
/// non-singular; B may carry several right-hand sides (one per column).
RationalMatrix solve_exact(RationalMatrix a, RationalMatrix b);

struct FloatSolution {
  Eigen::MatrixXd x;
  double residual = 0.0;  // max-abs entry of A X - B after refinement
  int refinement_steps = 0;
};

/// Partial-pivot LU in double precision followed by iterative refinement.
FloatSolution solve_float(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int max_refinements = 3);

Eigen::MatrixXd to_eigen(const RationalMatrix& m);

}  // namespace chamberwalk::linalg
