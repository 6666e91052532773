#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/specmat.hpp"
#include "subsum/subspaces.hpp"
#include "subsum/types.hpp"

// Assembly of A = P_1 + ... + P_n, the iteration I - (I-A)^N to the limit
// projection onto X_1 + ... + X_n, the direct Gram-solve construction
// P = S G^{-1} J, certified rate bounds, and composition across reducible
// blocks.

namespace subsum {

struct IterationTrace {
  std::vector<double> gaps;       // ||P_N - P_{N+1}|| per step, N = 1,2,...
  std::vector<double> residuals;  // ||P_N - P_limit||, filled when converged
  int steps = 0;
  bool converged = false;
  Matrix limit_matrix;            // I - (I-A)^steps, even on divergence
  ProjectionOperator limit;       // valid only when converged
};

enum class RateVariant { weighted_inf, weighted_one };

struct RateBound {
  PerronCertificate certificate;
  Vector projection_norms;  // ||P_i||, Euclidean operator norms
  RateVariant variant = RateVariant::weighted_inf;
};

inline Matrix sum_operator(const SubspaceSystem& sys) {
  Matrix A = Matrix::Zero(sys.ambient_dim, sys.ambient_dim);
  for (const auto& P : sys.projections) A += P.matrix;
  return A;
}

namespace detail {

inline Matrix sum_basis(const SubspaceSystem& sys) {
  int total = 0;
  for (const auto& S : sys.subspaces) total += S.dim();
  Matrix all(sys.ambient_dim, total);
  int c = 0;
  for (const auto& S : sys.subspaces) {
    all.middleCols(c, S.dim()) = S.basis;
    c += S.dim();
  }
  Eigen::JacobiSVD<Matrix> svd(all, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(numerical_rank(all));
}

inline ProjectionOperator make_limit_projection(const Matrix& P, const SubspaceSystem& sys) {
  const ProjectionKind kind = operator_norm(P - P.transpose()) <= 1e-9 * std::max(1.0, operator_norm(P))
                                  ? ProjectionKind::orthogonal
                                  : ProjectionKind::oblique;
  return ProjectionOperator(P, sum_basis(sys), kind);
}

}  // namespace detail

// Neumann-type sequence, first order: R_N = (I-A)^N is multiplied by (I-A)
// each step so that per-N residuals line up with the per-N rate bounds.
inline IterationTrace iterate_sum_projection(const SubspaceSystem& sys, double tol = 1e-12,
                                             int max_steps = 10000) {
  if (tol <= 0.0 || max_steps < 1) throw PreconditionError("need tol > 0 and max_steps >= 1");
  const int d = sys.ambient_dim;
  const Matrix I = Matrix::Identity(d, d);
  const Matrix M = I - sum_operator(sys);

  IterationTrace trace;
  Matrix R = M;
  for (int step = 1; step <= max_steps; ++step) {
    const Matrix next = R * M;
    const double gap = operator_norm(next - R);
    trace.gaps.push_back(gap);
    R = next;
    if (gap <= tol) {
      // P_step already coincides with P_{step+1}; report convergence at N = step.
      trace.converged = true;
      trace.steps = step;
      break;
    }
  }
  trace.limit_matrix = I - R;
  if (!trace.converged) {
    trace.steps = static_cast<int>(trace.gaps.size());
    return trace;
  }
  trace.limit = detail::make_limit_projection(trace.limit_matrix, sys);
  // Second pass for the residuals ||R_N - R_limit||; recomputing the powers
  // keeps memory flat for large ambient dimensions.
  trace.residuals.reserve(trace.steps);
  Matrix RN = M;
  for (int step = 1; step <= trace.steps; ++step) {
    trace.residuals.push_back(operator_norm(RN - R));
    if (step < trace.steps) RN = RN * M;
  }
  return trace;
}

// P = S G^{-1} J with G expressed in orthonormal bases of each subspace, so
// that block (i,j) is Q_i^t P_i Q_j and the diagonal blocks are identities.
inline ProjectionOperator direct_sum_projection(const SubspaceSystem& sys) {
  const int d = sys.ambient_dim;
  const int n = sys.size();
  std::vector<Matrix> Q(n);
  std::vector<int> offset(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    Q[i] = orthonormal_basis(sys.subspaces[i]).basis;
    offset[i + 1] = offset[i] + static_cast<int>(Q[i].cols());
  }
  const int K = offset[n];
  Matrix S(d, K), J(K, d), G(K, K);
  for (int i = 0; i < n; ++i) {
    S.middleCols(offset[i], Q[i].cols()) = Q[i];
    J.middleRows(offset[i], Q[i].cols()) = Q[i].transpose() * sys.projections[i].matrix;
    for (int j = 0; j < n; ++j) {
      G.block(offset[i], offset[j], Q[i].cols(), Q[j].cols()) =
          i == j ? Matrix::Identity(Q[i].cols(), Q[i].cols())
                 : Matrix(Q[i].transpose() * sys.projections[i].matrix * Q[j]);
    }
  }
  Eigen::FullPivLU<Matrix> lu(G);
  if (!lu.isInvertible()) throw SingularError("Gram operator singular");
  const Matrix P = S * lu.solve(J);
  return detail::make_limit_projection(P, sys);
}

// ||I - (I-A)^N - P|| bound of the two rate-of-convergence statements.
inline double rate_bound(const RateBound& rb, int N) {
  if (N < 1) throw PreconditionError("rate bound needs N >= 1");
  const double alpha = rb.certificate.alpha;
  if (alpha >= 1.0) throw PreconditionError("invalid certificate: alpha >= 1");
  const Vector& w = rb.certificate.w;
  const Vector& p = rb.projection_norms;
  if (w.size() != p.size()) throw PreconditionError("certificate/norm size mismatch");
  if (rb.variant == RateVariant::weighted_inf && rb.certificate.side != CertificateSide::row)
    throw PreconditionError("weighted_inf bound needs a row certificate (Ew <= alpha w)");
  if (rb.variant == RateVariant::weighted_one && rb.certificate.side != CertificateSide::column)
    throw PreconditionError("weighted_one bound needs a column certificate (E^t w <= alpha w)");
  double C;
  if (rb.variant == RateVariant::weighted_inf) {
    C = w.sum() * (p.array() / w.array()).maxCoeff();
  } else {
    C = (w.array() * p.array()).sum() * w.array().inverse().maxCoeff();
  }
  return C * std::pow(alpha, N) / (1.0 - alpha);
}

struct DominationReport {
  bool ok = true;
  std::vector<int> violations;  // values of N where the bound fails
};

inline DominationReport verify_rate_domination(const IterationTrace& trace, const RateBound& rb,
                                               double slack = 1e-9) {
  if (!trace.converged) throw PreconditionError("trace did not converge");
  DominationReport report;
  for (std::size_t k = 0; k < trace.residuals.size(); ++k) {
    const int N = static_cast<int>(k) + 1;
    if (trace.residuals[k] > rate_bound(rb, N) + slack) {
      report.ok = false;
      report.violations.push_back(N);
    }
  }
  return report;
}

inline Vector projection_norms(const SubspaceSystem& sys) {
  Vector p(sys.size());
  for (int i = 0; i < sys.size(); ++i) p(i) = operator_norm(sys.projections[i].matrix);
  return p;
}

// Reducible case: run the iteration per irreducible block, then chain the
// block projections through I - (I - Ptilde_1) ... (I - Ptilde_m).
inline ProjectionOperator compose_reducible(const SubspaceSystem& sys, const BlockStructure& blocks,
                                            double tol = 1e-12, int max_steps = 10000) {
  const int d = sys.ambient_dim;
  Matrix product = Matrix::Identity(d, d);
  for (std::size_t b = 0; b < blocks.blocks.size(); ++b) {
    std::vector<Subspace> subs;
    std::vector<ProjectionOperator> projs;
    for (int idx : blocks.blocks[b]) {
      subs.push_back(sys.subspaces[idx]);
      projs.push_back(sys.projections[idx]);
    }
    SubspaceSystem block_sys(std::move(subs), std::move(projs));
    const InteractionMatrix Eb = interaction_matrix(block_sys);
    if (spectral_radius(Eb, 1e-10) >= 1.0)
      throw PreconditionError("block " + std::to_string(b + 1) + " fails the r(E) < 1 criterion");
    IterationTrace trace = iterate_sum_projection(block_sys, tol, max_steps);
    if (!trace.converged)
      throw ConvergenceError("block " + std::to_string(b + 1) + " iteration diverged",
                             trace.gaps.empty() ? 0.0 : trace.gaps.back());
    product = product * (Matrix::Identity(d, d) - trace.limit.matrix);
  }
  const Matrix P = Matrix::Identity(d, d) - product;
  return detail::make_limit_projection(P, sys);
}

}  // namespace subsum
