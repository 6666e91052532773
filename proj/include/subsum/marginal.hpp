#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/specmat.hpp"
#include "subsum/subspaces.hpp"
#include "subsum/sumproj.hpp"
#include "subsum/types.hpp"

// Marginal subspaces over finite probability spaces: partitions as
// sub-sigma-algebras, the psi' dependence coefficient, conditional
// expectations and centered projections in weighted l^p, and the r(E) < 1
// pipeline at p = 2.

namespace subsum {

struct FiniteProbabilitySpace {
  int size = 0;
  Vector weights;

  FiniteProbabilitySpace() = default;

  explicit FiniteProbabilitySpace(Vector w) : size(static_cast<int>(w.size())), weights(std::move(w)) {
    if (size < 1) throw PreconditionError("probability space needs at least one atom");
    for (int k = 0; k < size; ++k)
      if (!(weights(k) > 0.0))
        throw PreconditionError("zero-probability atoms are disallowed; merge or drop them");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
      throw PreconditionError("weights must sum to 1");
  }
};

struct Partition {
  std::vector<int> block_of;
  int block_count = 0;

  Partition() = default;

  Partition(std::vector<int> assignment, int count)
      : block_of(std::move(assignment)), block_count(count) {
    if (block_count < 1) throw PreconditionError("partition needs at least one block");
    std::vector<char> seen(block_count, 0);
    for (int b : block_of) {
      if (b < 0 || b >= block_count) throw PreconditionError("block index out of range");
      seen[b] = 1;
    }
    for (char s : seen)
      if (!s) throw PreconditionError("every block must contain at least one atom");
  }
};

enum class NormExponent { p1, p2, pinf };

struct MarginalSystem {
  FiniteProbabilitySpace space;
  std::vector<Partition> partitions;
  NormExponent p = NormExponent::p2;

  MarginalSystem() = default;

  MarginalSystem(FiniteProbabilitySpace sp, std::vector<Partition> parts,
                 NormExponent exponent = NormExponent::p2)
      : space(std::move(sp)), partitions(std::move(parts)), p(exponent) {
    for (const auto& part : partitions)
      if (static_cast<int>(part.block_of.size()) != space.size)
        throw PreconditionError("partition defined over a different space");
  }
};

inline double weighted_norm(const Vector& xi, const Vector& mu, NormExponent p) {
  switch (p) {
    case NormExponent::p1:
      return (mu.array() * xi.array().abs()).sum();
    case NormExponent::p2:
      return std::sqrt((mu.array() * xi.array().square()).sum());
    default:
      return xi.cwiseAbs().maxCoeff();
  }
}

inline NormExponent conjugate_exponent(NormExponent p) {
  if (p == NormExponent::p1) return NormExponent::pinf;
  if (p == NormExponent::pinf) return NormExponent::p1;
  return NormExponent::p2;
}

// inf over atom pairs of mu(a cap b) / (mu(a) mu(b)). The ratio of any pair
// of unions is a weighted average of atom ratios, so the atom minimum
// attains the infimum over all measurable sets.
inline double psi_prime(const Partition& A, const Partition& B,
                        const FiniteProbabilitySpace& sp) {
  Matrix joint = Matrix::Zero(A.block_count, B.block_count);
  Vector mass_a = Vector::Zero(A.block_count), mass_b = Vector::Zero(B.block_count);
  for (int k = 0; k < sp.size; ++k) {
    joint(A.block_of[k], B.block_of[k]) += sp.weights(k);
    mass_a(A.block_of[k]) += sp.weights(k);
    mass_b(B.block_of[k]) += sp.weights(k);
  }
  double inf = std::numeric_limits<double>::infinity();
  for (int a = 0; a < A.block_count; ++a)
    for (int b = 0; b < B.block_count; ++b)
      inf = std::min(inf, joint(a, b) / (mass_a(a) * mass_b(b)));
  return inf;
}

// (M xi)_k = weighted average of xi over the block containing atom k.
inline Matrix conditional_expectation(const Partition& A, const FiniteProbabilitySpace& sp) {
  if (static_cast<int>(A.block_of.size()) != sp.size)
    throw PreconditionError("partition/space size mismatch");
  Vector mass = Vector::Zero(A.block_count);
  for (int k = 0; k < sp.size; ++k) mass(A.block_of[k]) += sp.weights(k);
  Matrix M = Matrix::Zero(sp.size, sp.size);
  for (int k = 0; k < sp.size; ++k)
    for (int l = 0; l < sp.size; ++l)
      if (A.block_of[k] == A.block_of[l]) M(k, l) = sp.weights(l) / mass(A.block_of[k]);
  return M;
}

// xi -> E(xi|A) - E xi, projection onto mean-zero A-measurable vectors.
inline Matrix centered_projection(const Partition& A, const FiniteProbabilitySpace& sp) {
  return conditional_expectation(A, sp) -
         Vector::Ones(sp.size) * sp.weights.transpose();
}

// e_ij = 1 - psi'(F_i, F_j); symmetric, nonnegative, zero diagonal.
inline InteractionMatrix interaction_from_psi(const MarginalSystem& ms) {
  const int n = static_cast<int>(ms.partitions.size());
  Matrix E = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double e = std::max(0.0, 1.0 - psi_prime(ms.partitions[i], ms.partitions[j], ms.space));
      E(i, j) = E(j, i) = e;
    }
  return InteractionMatrix(std::move(E));
}

namespace detail {

// Basis of mean-zero A-measurable vectors: indicator of block b minus its
// mass, b = 1..block_count-1. Empty (0 columns) for the trivial partition.
inline Matrix centered_block_basis(const Partition& A, const FiniteProbabilitySpace& sp) {
  Vector mass = Vector::Zero(A.block_count);
  for (int k = 0; k < sp.size; ++k) mass(A.block_of[k]) += sp.weights(k);
  Matrix C = Matrix::Zero(sp.size, A.block_count - 1);
  for (int b = 0; b + 1 < A.block_count; ++b)
    for (int k = 0; k < sp.size; ++k)
      C(k, b) = (A.block_of[k] == b ? 1.0 : 0.0) - mass(b);
  return C;
}

// Random mean-zero A-measurable vector with block values ~ N(0,1).
inline Vector random_centered_vector(const Partition& A, const FiniteProbabilitySpace& sp,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector block_values(A.block_count);
  for (int b = 0; b < A.block_count; ++b) block_values(b) = gauss(rng);
  Vector xi(sp.size);
  for (int k = 0; k < sp.size; ++k) xi(k) = block_values(A.block_of[k]);
  xi.array() -= (sp.weights.array() * xi.array()).sum();
  return xi;
}

}  // namespace detail

struct InequalityReport {
  bool ok = true;
  int checked = 0;
  int violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();  // min of rhs - lhs
  double exact_restricted_norm = -1.0;  // p = 2 only, else -1
};

// Sampled check of ||E(xi|B)||_p <= (1 - psi') ||xi||_p on mean-zero
// A-measurable xi; at p = 2 also the exact restricted operator norm in the
// mu-weighted inner product.
inline InequalityReport lemma_bound_check(const Partition& A, const Partition& B,
                                          const FiniteProbabilitySpace& sp, NormExponent p,
                                          int samples, std::mt19937_64& rng,
                                          double slack = 1e-10) {
  if (samples < 1) throw PreconditionError("need samples >= 1");
  const double factor = 1.0 - psi_prime(A, B, sp);
  const Matrix CE_B = conditional_expectation(B, sp);
  InequalityReport report;
  for (int s = 0; s < samples; ++s) {
    const Vector xi = detail::random_centered_vector(A, sp, rng);
    const double lhs = weighted_norm(CE_B * xi, sp.weights, p);
    const double rhs = factor * weighted_norm(xi, sp.weights, p);
    report.worst_slack = std::min(report.worst_slack, rhs - lhs);
    ++report.checked;
    if (lhs > rhs + slack) {
      report.ok = false;
      ++report.violations;
    }
  }
  if (p == NormExponent::p2) {
    if (A.block_count == 1) {
      report.exact_restricted_norm = 0.0;
    } else {
      const Vector sqw = sp.weights.array().sqrt();
      const Matrix W = sqw.asDiagonal();
      const Matrix Winv = sqw.array().inverse().matrix().asDiagonal();
      const Matrix Q = orthonormal_basis(Subspace(W * detail::centered_block_basis(A, sp))).basis;
      report.exact_restricted_norm = operator_norm(W * CE_B * Winv * Q);
      if (report.exact_restricted_norm > factor + slack) {
        report.ok = false;
        ++report.violations;
      }
    }
  }
  return report;
}

// Sampled check of |E(xi eta)| <= (1 - psi') ||xi||_p ||eta||_q for
// mean-zero A-measurable xi and B-measurable eta.
inline InequalityReport covariance_inequality_check(const Partition& A, const Partition& B,
                                                    const FiniteProbabilitySpace& sp,
                                                    NormExponent p, int samples,
                                                    std::mt19937_64& rng, double slack = 1e-10) {
  if (samples < 1) throw PreconditionError("need samples >= 1");
  const NormExponent q = conjugate_exponent(p);
  const double factor = 1.0 - psi_prime(A, B, sp);
  std::normal_distribution<double> gauss(0.0, 1.0);
  InequalityReport report;
  for (int s = 0; s < samples; ++s) {
    const Vector xi = detail::random_centered_vector(A, sp, rng);
    Vector block_values(B.block_count);
    for (int b = 0; b < B.block_count; ++b) block_values(b) = gauss(rng);
    Vector eta(sp.size);
    for (int k = 0; k < sp.size; ++k) eta(k) = block_values(B.block_of[k]);
    const double lhs = std::abs((sp.weights.array() * xi.array() * eta.array()).sum());
    const double rhs = factor * weighted_norm(xi, sp.weights, p) * weighted_norm(eta, sp.weights, q);
    report.worst_slack = std::min(report.worst_slack, rhs - lhs);
    ++report.checked;
    if (lhs > rhs + slack) {
      report.ok = false;
      ++report.violations;
    }
  }
  return report;
}

// The p = 2 representative system: coordinates rescaled by sqrt(mu_k) so the
// weighted space becomes Euclidean; subspaces are the mean-zero
// block-constant spaces and projections the centered conditional
// expectations.
inline SubspaceSystem build_marginal_system(const MarginalSystem& ms) {
  const Vector sqw = ms.space.weights.array().sqrt();
  const Matrix W = sqw.asDiagonal();
  const Matrix Winv = sqw.array().inverse().matrix().asDiagonal();
  std::vector<Subspace> subs;
  std::vector<ProjectionOperator> projs;
  for (const auto& part : ms.partitions) {
    if (part.block_count < 2)
      throw PreconditionError("trivial partition has a zero-dimensional centered subspace");
    Matrix basis = W * detail::centered_block_basis(part, ms.space);
    Matrix P = W * centered_projection(part, ms.space) * Winv;
    projs.emplace_back(std::move(P), basis, ProjectionKind::orthogonal);
    subs.emplace_back(std::move(basis));
  }
  return SubspaceSystem(std::move(subs), std::move(projs));
}

inline IterationTrace marginal_sum_projection(const MarginalSystem& ms, double tol = 1e-12,
                                              int max_steps = 10000) {
  const InteractionMatrix E = interaction_from_psi(ms);
  if (spectral_radius(E, 1e-10) >= 1.0)
    throw PreconditionError("r(E) >= 1: the psi' criterion fails for this system");
  const SubspaceSystem sys = build_marginal_system(ms);
  IterationTrace trace = iterate_sum_projection(sys, tol, max_steps);
  if (trace.converged) {
    int expected = 0;
    for (const auto& part : ms.partitions) expected += part.block_count - 1;
    if (trace.limit.rank() != expected)
      throw Error("sum dimension does not match linear independence claim");
  }
  return trace;
}

}  // namespace subsum
