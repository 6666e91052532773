#pragma once

#include <utility>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/specmat.hpp"
#include "subsum/types.hpp"

// Finite-dimensional subspace and projection algebra: bases, orthogonal and
// oblique projections, restricted operator norms, interaction-matrix
// assembly, kernel intersections. The ambient norm is Euclidean throughout.

namespace subsum {

struct Subspace {
  int ambient_dim = 0;
  Matrix basis;  // ambient_dim x k, full column rank

  Subspace() = default;

  explicit Subspace(Matrix b) : ambient_dim(static_cast<int>(b.rows())), basis(std::move(b)) {
    if (basis.cols() < 1) throw PreconditionError("subspace needs at least one basis vector");
    if (numerical_rank(basis) != basis.cols())
      throw RankError("subspace basis is rank deficient");
  }

  int dim() const { return static_cast<int>(basis.cols()); }
};

enum class ProjectionKind { orthogonal, oblique };

struct ProjectionOperator {
  Matrix matrix;       // d x d
  Matrix range_basis;  // d x k
  ProjectionKind kind = ProjectionKind::orthogonal;

  ProjectionOperator() = default;

  ProjectionOperator(Matrix m, Matrix range, ProjectionKind k)
      : matrix(std::move(m)), range_basis(std::move(range)), kind(k) {
    const double scale = std::max(1.0, operator_norm(matrix));
    if (operator_norm(matrix * matrix - matrix) > 1e-10 * scale)
      throw PreconditionError("operator is not idempotent within tolerance");
    if (operator_norm(matrix * range_basis - range_basis) > 1e-8 * scale)
      throw PreconditionError("projection does not fix its recorded range basis");
  }

  int ambient_dim() const { return static_cast<int>(matrix.rows()); }
  int rank() const { return static_cast<int>(range_basis.cols()); }
};

struct SubspaceSystem {
  int ambient_dim = 0;
  std::vector<Subspace> subspaces;
  std::vector<ProjectionOperator> projections;

  SubspaceSystem() = default;

  SubspaceSystem(std::vector<Subspace> subs, std::vector<ProjectionOperator> projs)
      : subspaces(std::move(subs)), projections(std::move(projs)) {
    if (subspaces.empty() || subspaces.size() != projections.size())
      throw PreconditionError("system needs matching nonempty subspace and projection lists");
    ambient_dim = subspaces.front().ambient_dim;
    for (std::size_t i = 0; i < subspaces.size(); ++i) {
      if (subspaces[i].ambient_dim != ambient_dim ||
          projections[i].ambient_dim() != ambient_dim)
        throw PreconditionError("inconsistent ambient dimensions in system");
      // range of projections[i] must equal subspaces[i]
      Matrix joint(ambient_dim, subspaces[i].dim() + projections[i].rank());
      joint << subspaces[i].basis, projections[i].range_basis;
      if (numerical_rank(joint) != subspaces[i].dim() ||
          projections[i].rank() != subspaces[i].dim())
        throw PreconditionError("projection range does not match its subspace");
    }
  }

  int size() const { return static_cast<int>(subspaces.size()); }
};

// Orthonormal basis of the same column space, via thin QR.
inline Subspace orthonormal_basis(const Subspace& S) {
  Eigen::HouseholderQR<Matrix> qr(S.basis);
  Matrix Q = qr.householderQ() * Matrix::Identity(S.ambient_dim, S.dim());
  return Subspace(std::move(Q));
}

inline ProjectionOperator orthogonal_projection(const Subspace& S) {
  const Matrix Q = orthonormal_basis(S).basis;
  return ProjectionOperator(Q * Q.transpose(), Q, ProjectionKind::orthogonal);
}

// Projection with the given range and kernel; requires them to be
// complementary (dim range + dim kernel = d, trivial intersection).
inline ProjectionOperator oblique_projection(const Subspace& range, const Subspace& kernel) {
  const int d = range.ambient_dim;
  if (kernel.ambient_dim != d)
    throw PreconditionError("range and kernel live in different ambient spaces");
  if (range.dim() + kernel.dim() != d)
    throw PreconditionError("range and kernel dimensions must add up to the ambient dimension");
  Matrix B(d, d);
  B << range.basis, kernel.basis;
  if (numerical_rank(B) != d)
    throw SingularError("range and kernel overlap: no oblique projection exists");
  Matrix target(d, d);
  target << range.basis, Matrix::Zero(d, kernel.dim());
  // P [R K] = [R 0]
  const Matrix P = B.transpose().partialPivLu().solve(target.transpose()).transpose();
  return ProjectionOperator(P, range.basis, ProjectionKind::oblique);
}

namespace detail {

// Orthonormal basis of the orthogonal complement of the column space of M.
inline Matrix orthogonal_complement(const Matrix& M) {
  const int d = static_cast<int>(M.rows());
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
  const Eigen::Index r = numerical_rank(M);
  return svd.matrixU().rightCols(d - r);
}

}  // namespace detail

// Projection onto `target` whose kernel contains `annihilate`, realized as
// the oblique projection along annihilate + (target + annihilate)^perp.
inline ProjectionOperator annihilating_projection(const Subspace& target,
                                                  const Subspace& annihilate) {
  const int d = target.ambient_dim;
  Matrix joint(d, target.dim() + annihilate.dim());
  joint << target.basis, annihilate.basis;
  if (numerical_rank(joint) != joint.cols())
    throw SingularError("target and annihilated subspace intersect nontrivially");
  const Matrix rest = detail::orthogonal_complement(joint);
  if (rest.cols() == 0) return oblique_projection(target, annihilate);
  Matrix kernel(d, annihilate.dim() + rest.cols());
  kernel << annihilate.basis, rest;
  return oblique_projection(target, Subspace(kernel));
}

// Exact restricted operator norm ||P|_S|| (largest singular value of P Q for
// an orthonormal basis Q of S).
inline double restricted_norm(const ProjectionOperator& P, const Subspace& S) {
  const Matrix Q = orthonormal_basis(S).basis;
  return operator_norm(P.matrix * Q);
}

// e_ii = 0, e_ij = ||P_i|_{X_j}|| for i != j.
inline InteractionMatrix interaction_matrix(const SubspaceSystem& sys) {
  const int n = sys.size();
  Matrix E = Matrix::Zero(n, n);
  std::vector<Matrix> bases(n);
  for (int j = 0; j < n; ++j) bases[j] = orthonormal_basis(sys.subspaces[j]).basis;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) E(i, j) = operator_norm(sys.projections[i].matrix * bases[j]);
  return InteractionMatrix(std::move(E));
}

// Basis of ker(P_1) cap ... cap ker(P_n), i.e. the null space of the stacked
// matrix. May have zero columns.
inline Matrix kernel_intersection(const std::vector<ProjectionOperator>& projections) {
  if (projections.empty()) throw PreconditionError("empty projection list");
  const int d = projections.front().ambient_dim();
  Matrix stack(static_cast<Eigen::Index>(projections.size()) * d, d);
  for (std::size_t i = 0; i < projections.size(); ++i) {
    if (projections[i].ambient_dim() != d)
      throw PreconditionError("mixed ambient dimensions in kernel intersection");
    stack.middleRows(static_cast<Eigen::Index>(i) * d, d) = projections[i].matrix;
  }
  Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullV);
  const Eigen::Index r = numerical_rank(stack);
  return svd.matrixV().rightCols(d - r);
}

}  // namespace subsum
