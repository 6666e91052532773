#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace subsum {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Euclidean operator norm (largest singular value). Small matrices go
// through a full SVD; large ones through power iteration on M^t M, which
// converges to the top singular value from below.
inline double operator_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  if (std::min(M.rows(), M.cols()) <= 48)
    return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
  Eigen::VectorXd v(M.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 1e-3 * std::cos(double(i));
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const Eigen::VectorXd w = M * v;
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = M.transpose() * w;
    const double vn = v.norm();
    if (vn == 0.0) return next;
    v /= vn;
    if (std::abs(next - sigma) <= 1e-13 * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

// Singular values below rank_tol * sigma_max count as zero.
inline constexpr double kRankTol = 1e-10;

inline Eigen::Index numerical_rank(const Matrix& M, double rank_tol = kRankTol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * sv(0)) ++r;
  return r;
}

}  // namespace subsum
