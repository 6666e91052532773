#pragma once

#include <unsupported/Eigen/KroneckerProduct>

#include <utility>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/specmat.hpp"
#include "subsum/subspaces.hpp"
#include "subsum/sumproj.hpp"
#include "subsum/types.hpp"

// Tensor powers of Hilbert-space subspaces, realized by Kronecker products:
// minimal-angle cosines, the E^(m) criterion, and the pairwise-annihilation
// construction.

namespace subsum {

inline constexpr long kDefaultTensorCap = 4096;

struct TensorSystem {
  SubspaceSystem base;
  int m = 1;
  long size_cap = kDefaultTensorCap;

  TensorSystem() = default;

  TensorSystem(SubspaceSystem b, int power, long cap = kDefaultTensorCap)
      : base(std::move(b)), m(power), size_cap(cap) {
    if (m < 1) throw PreconditionError("tensor power must be >= 1");
    long dim = 1;
    for (int k = 0; k < m; ++k) {
      dim *= base.ambient_dim;
      if (dim > size_cap)
        throw SizeCapError("tensor dimension d^m exceeds the size cap");
    }
  }

  long ambient_dim() const {
    long dim = 1;
    for (int k = 0; k < m; ++k) dim *= base.ambient_dim;
    return dim;
  }
};

// c_0(Y, Z): largest singular value of Q_Y^t Q_Z, which equals ||P_Y P_Z||.
inline double min_angle_cosine(const Subspace& Y, const Subspace& Z) {
  if (Y.ambient_dim != Z.ambient_dim)
    throw PreconditionError("subspaces live in different ambient spaces");
  const Matrix QY = orthonormal_basis(Y).basis;
  const Matrix QZ = orthonormal_basis(Z).basis;
  return operator_norm(QY.transpose() * QZ);
}

namespace detail {

inline Matrix kron_fold(const std::vector<const Matrix*>& factors) {
  Matrix out = *factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k)
    out = Eigen::kroneckerProduct(out, *factors[k]).eval();
  return out;
}

inline Matrix kron_self(const Matrix& M, int m) {
  Matrix out = M;
  for (int k = 1; k < m; ++k) out = Eigen::kroneckerProduct(out, M).eval();
  return out;
}

inline void check_cap(long d, int m, long cap) {
  long dim = 1;
  for (int k = 0; k < m; ++k) {
    dim *= d;
    if (dim > cap) throw SizeCapError("tensor dimension d^m exceeds the size cap");
  }
}

}  // namespace detail

inline ProjectionOperator kron_power(const ProjectionOperator& P, int m,
                                     long size_cap = kDefaultTensorCap) {
  if (m < 1) throw PreconditionError("tensor power must be >= 1");
  detail::check_cap(P.ambient_dim(), m, size_cap);
  if (m == 1) return P;
  return ProjectionOperator(detail::kron_self(P.matrix, m),
                            detail::kron_self(P.range_basis, m), P.kind);
}

// e^(m)_ij = c_0(X_i, X_j)^m.
inline InteractionMatrix tensor_interaction(const SubspaceSystem& sys, int m) {
  if (m < 1) throw PreconditionError("tensor power must be >= 1");
  const int n = sys.size();
  Matrix E = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double c = min_angle_cosine(sys.subspaces[i], sys.subspaces[j]);
      E(i, j) = E(j, i) = std::pow(c, m);
    }
  return InteractionMatrix(std::move(E));
}

namespace detail {

inline SubspaceSystem lift_orthogonal(const SubspaceSystem& sys, int m, long cap) {
  std::vector<Subspace> subs;
  std::vector<ProjectionOperator> projs;
  for (int i = 0; i < sys.size(); ++i) {
    const Matrix Q = orthonormal_basis(sys.subspaces[i]).basis;
    subs.emplace_back(kron_self(Q, m));
    projs.push_back(kron_power(orthogonal_projection(sys.subspaces[i]), m, cap));
  }
  return SubspaceSystem(std::move(subs), std::move(projs));
}

}  // namespace detail

// The r(E^(m)) < 1 route: lift the orthogonal projections to the tensor
// space and run the sum iteration there. Verifies the norm multiplicativity
// ||Q_i Q_j|| = c_0(X_i, X_j)^m on the way.
inline IterationTrace tensor_sum_projection_E(const SubspaceSystem& sys, int m,
                                              double tol = 1e-12, int max_steps = 10000,
                                              long size_cap = kDefaultTensorCap) {
  const InteractionMatrix Em = tensor_interaction(sys, m);
  if (spectral_radius(Em, 1e-10) >= 1.0)
    throw PreconditionError("r(E^(m)) >= 1: the tensor criterion fails at this power");
  detail::check_cap(sys.ambient_dim, m, size_cap);
  const SubspaceSystem lifted = detail::lift_orthogonal(sys, m, size_cap);
  for (int i = 0; i < lifted.size(); ++i)
    for (int j = 0; j < lifted.size(); ++j) {
      if (i == j) continue;
      const double norm = operator_norm(lifted.projections[i].matrix * lifted.projections[j].matrix);
      if (std::abs(norm - Em.entries(i, j)) > 1e-10)
        throw Error("||Q_i Q_j|| does not match c_0^m");
    }
  IterationTrace trace = iterate_sum_projection(lifted, tol, max_steps);
  if (trace.converged) {
    int expected = 0;
    for (const auto& S : lifted.subspaces) expected += S.dim();
    if (trace.limit.rank() != expected)
      throw Error("tensor sum dimension does not match linear independence claim");
  }
  return trace;
}

// The pairwise route (m >= n-1): Q_i is the Kronecker product of the n-1
// annihilating projections P_ij (j != i, increasing j) followed by m-(n-1)
// copies of the orthogonal projection onto X_i. Then Q_i vanishes on every
// X_j^m and P = Q_1 + ... + Q_n is a projection onto the sum.
inline ProjectionOperator tensor_sum_projection_pairwise(const SubspaceSystem& sys, int m,
                                                         long size_cap = kDefaultTensorCap) {
  const int n = sys.size();
  if (m < n - 1) throw PreconditionError("pairwise construction needs m >= n-1");
  detail::check_cap(sys.ambient_dim, m, size_cap);

  std::vector<Subspace> tensor_subs;
  std::vector<ProjectionOperator> tensor_projs;
  for (int i = 0; i < n; ++i) {
    std::vector<Matrix> factors;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      factors.push_back(annihilating_projection(sys.subspaces[i], sys.subspaces[j]).matrix);
    }
    const Matrix Pi_orth = orthogonal_projection(sys.subspaces[i]).matrix;
    for (int k = n - 1; k < m; ++k) factors.push_back(Pi_orth);
    std::vector<const Matrix*> ptrs;
    for (const Matrix& f : factors) ptrs.push_back(&f);
    Matrix Qi = detail::kron_fold(ptrs);

    const Matrix Q = orthonormal_basis(sys.subspaces[i]).basis;
    Matrix range = detail::kron_self(Q, m);
    tensor_projs.emplace_back(std::move(Qi), range, ProjectionKind::oblique);
    tensor_subs.emplace_back(std::move(range));
  }
  // Q_i must vanish on X_j^m for j != i.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (operator_norm(tensor_projs[i].matrix * tensor_subs[j].basis) > 1e-9)
        throw Error("Q_i does not annihilate X_j^m");
    }
  SubspaceSystem tensor_sys(std::move(tensor_subs), std::move(tensor_projs));
  return detail::make_limit_projection(sum_operator(tensor_sys), tensor_sys);
}

}  // namespace subsum
