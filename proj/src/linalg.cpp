#include "chamberwalk/linalg.hpp"

namespace chamberwalk::linalg {

RationalMatrix solve_exact(RationalMatrix a, RationalMatrix b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("solve_exact: row count mismatch");
  const std::size_t rhs = n == 0 ? 0 : b[0].size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && sgn(a[pivot][col]) == 0) ++pivot;
    if (pivot == n) throw SingularMatrix("solve_exact: singular system");
    if (pivot != col) {
      std::swap(a[pivot], a[col]);
      std::swap(b[pivot], b[col]);
    }
    const Rational inv = 1 / a[col][col];
    for (std::size_t j = col; j < n; ++j) a[col][j] *= inv;
    for (std::size_t j = 0; j < rhs; ++j) b[col][j] *= inv;
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col || sgn(a[row][col]) == 0) continue;
      const Rational factor = a[row][col];
      for (std::size_t j = col; j < n; ++j) a[row][j] -= factor * a[col][j];
      for (std::size_t j = 0; j < rhs; ++j) b[row][j] -= factor * b[col][j];
    }
  }
  return b;
}

FloatSolution solve_float(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int max_refinements) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  FloatSolution out;
  out.x = lu.solve(b);
  Eigen::MatrixXd r = b - a * out.x;
  out.residual = r.cwiseAbs().maxCoeff();
  for (int step = 0; step < max_refinements && out.residual > 0.0; ++step) {
    out.x += lu.solve(r);
    r = b - a * out.x;
    out.residual = r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
    out.refinement_steps = step + 1;
  }
  return out;
}

Eigen::MatrixXd to_eigen(const RationalMatrix& m) {
  const Eigen::Index rows = static_cast<Eigen::Index>(m.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(m[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = m[i][j].get_d();
  return out;
}

}  // namespace chamberwalk::linalg
