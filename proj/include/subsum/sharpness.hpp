#pragma once

#include <random>
#include <utility>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/specmat.hpp"
#include "subsum/subspaces.hpp"
#include "subsum/types.hpp"

// Model spaces showing that r(E) < 1 is sharp: given a nonnegative
// zero-diagonal E with r(E) = 1, build vectors u^(i), v^(j) and a Euclidean
// product space with projections achieving ||P_i x|| = e_ij ||x|| exactly on
// each X_j.

namespace subsum {

struct SharpExample {
  InteractionMatrix E;
  std::vector<Vector> u_vectors;  // u^(i) = T f^(i)
  std::vector<Vector> v_vectors;  // v^(j) = T g^(j), orthonormal
  int y_dim = 1;
  int z_dim = 1;
  SubspaceSystem system;  // ambient dimension (n-1)*y_dim + z_dim
};

// Transposed rows of I - E. Requires r(E) = 1 (so that they are linearly
// dependent).
inline std::vector<Vector> row_vectors(const InteractionMatrix& E, double radius_tol = 1e-8) {
  const double r = spectral_radius(E, 1e-12);
  if (std::abs(r - 1.0) > radius_tol)
    throw PreconditionError("r(E) must equal 1; rescale the input by 1/r(E) first");
  const Matrix M = Matrix::Identity(E.n, E.n) - E.entries;
  std::vector<Vector> f;
  f.reserve(E.n);
  for (int i = 0; i < E.n; ++i) f.push_back(M.row(i).transpose());
  return f;
}

// Orthogonal T mapping the span of the f's into the hyperplane u_n = 0,
// via a Householder reflection sending a unit normal of the span to e_n.
inline Matrix hyperplane_rotation(const std::vector<Vector>& f_list) {
  if (f_list.empty()) throw PreconditionError("empty vector list");
  const int n = static_cast<int>(f_list.front().size());
  Matrix F(n, static_cast<int>(f_list.size()));
  for (std::size_t i = 0; i < f_list.size(); ++i) F.col(static_cast<int>(i)) = f_list[i];
  if (numerical_rank(F) == n)
    throw PreconditionError("vectors span the whole space; no hyperplane contains them");
  Eigen::JacobiSVD<Matrix> svd(F, Eigen::ComputeFullU);
  Vector normal = svd.matrixU().col(n - 1);
  if (normal(n - 1) < 0.0) normal = -normal;
  Vector rho = normal - Vector::Unit(n, n - 1);
  const double len = rho.norm();
  if (len < 1e-14) return Matrix::Identity(n, n);
  rho /= len;
  return Matrix::Identity(n, n) - 2.0 * rho * rho.transpose();
}

inline SharpExample build_sharp_example(const InteractionMatrix& E, int y_dim = 1,
                                        int z_dim = 1) {
  if (y_dim < 1 || z_dim < y_dim)
    throw PreconditionError("need y_dim >= 1 and z_dim >= y_dim");
  const int n = E.n;
  const std::vector<Vector> f = row_vectors(E);
  const Matrix T = hyperplane_rotation(f);

  SharpExample ex;
  ex.E = E;
  ex.y_dim = y_dim;
  ex.z_dim = z_dim;
  for (int i = 0; i < n; ++i) ex.u_vectors.push_back(T * f[i]);
  for (int j = 0; j < n; ++j) ex.v_vectors.push_back(T.col(j));

  // X = Y^(n-1) x Z with Y = R^y_dim embedded in the leading coordinates of
  // Z = R^z_dim. X_i = {y v^(i)}, P_i x = <x, u^(i)> v^(i).
  const int D = (n - 1) * y_dim + z_dim;
  const Matrix Iy = Matrix::Identity(y_dim, y_dim);
  std::vector<Subspace> subs;
  std::vector<ProjectionOperator> projs;
  for (int i = 0; i < n; ++i) {
    Matrix B = Matrix::Zero(D, y_dim);          // y -> y v^(i)
    Matrix C = Matrix::Zero(y_dim, D);          // x -> <x, u^(i)>
    for (int j = 0; j < n - 1; ++j) {
      B.middleRows(j * y_dim, y_dim) = ex.v_vectors[i](j) * Iy;
      C.middleCols(j * y_dim, y_dim) = ex.u_vectors[i](j) * Iy;
    }
    B.block((n - 1) * y_dim, 0, y_dim, y_dim) = ex.v_vectors[i](n - 1) * Iy;
    C.block(0, (n - 1) * y_dim, y_dim, y_dim) = ex.u_vectors[i](n - 1) * Iy;
    subs.emplace_back(B);
    projs.emplace_back(Matrix(B * C), B, ProjectionKind::oblique);
  }
  ex.system = SubspaceSystem(std::move(subs), std::move(projs));
  return ex;
}

struct SharpnessReport {
  bool ok = true;
  double max_pointwise_deviation = 0.0;  // of | ||P_i x|| - e_ij ||x|| | / ||x||
  double max_norm_deviation = 0.0;       // of | ||P_i|_{X_j}|| - e_ij |
  int violations = 0;
};

// Checks the equality ||P_i x|| = e_ij ||x|| on random x in X_j, and the
// restricted operator norms against the matrix entries.
inline SharpnessReport verify_norm_identities(const SharpExample& ex, std::mt19937_64& rng,
                                              int samples = 1000, double tol = 1e-9) {
  SharpnessReport report;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = ex.E.n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double e_ij = ex.E.entries(i, j);
      const Matrix& Bj = ex.system.subspaces[j].basis;
      const Matrix& Pi = ex.system.projections[i].matrix;
      for (int s = 0; s < samples; ++s) {
        Vector y(ex.y_dim);
        for (int k = 0; k < ex.y_dim; ++k) y(k) = gauss(rng);
        const Vector x = Bj * y;
        const double nx = x.norm();
        if (nx == 0.0) continue;
        const double dev = std::abs((Pi * x).norm() - e_ij * nx) / nx;
        report.max_pointwise_deviation = std::max(report.max_pointwise_deviation, dev);
        if (dev > tol) {
          report.ok = false;
          ++report.violations;
        }
      }
      const double dev =
          std::abs(restricted_norm(ex.system.projections[i], ex.system.subspaces[j]) - e_ij);
      report.max_norm_deviation = std::max(report.max_norm_deviation, dev);
      if (dev > tol) {
        report.ok = false;
        ++report.violations;
      }
    }
  }
  return report;
}

// Repeatedly divides by the computed spectral radius; two or three rounds
// put r(E) within ~1e-14 of 1.
inline InteractionMatrix rescale_to_unit_radius(const InteractionMatrix& E) {
  Matrix entries = E.entries;
  for (int round = 0; round < 5; ++round) {
    const double r = spectral_radius(InteractionMatrix(entries), 1e-13);
    if (r <= 0.0) throw PreconditionError("cannot rescale: r(E) = 0");
    if (std::abs(r - 1.0) <= 1e-13) break;
    entries /= r;
  }
  return InteractionMatrix(std::move(entries));
}

}  // namespace subsum
