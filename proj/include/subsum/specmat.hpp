#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/types.hpp"

// Spectral analysis of nonnegative matrices with zero diagonal: spectral
// radius with certified Collatz-Wielandt brackets, Perron certificates,
// the principal-minor criterion, and irreducible block structure.

namespace subsum {

struct InteractionMatrix {
  int n = 0;
  Matrix entries;

  InteractionMatrix() = default;

  explicit InteractionMatrix(Matrix e) : n(static_cast<int>(e.rows())), entries(std::move(e)) {
    if (entries.rows() != entries.cols() || n < 1)
      throw PreconditionError("interaction matrix must be square and nonempty");
    for (int i = 0; i < n; ++i) {
      if (entries(i, i) != 0.0)
        throw PreconditionError("interaction matrix must have zero diagonal");
      for (int j = 0; j < n; ++j)
        if (entries(i, j) < 0.0)
          throw PreconditionError("interaction matrix must be nonnegative");
    }
  }
};

enum class CertificateSide { row, column };

struct PerronCertificate {
  double alpha = 0.0;              // in [0,1)
  Vector w;                        // strictly positive weights
  CertificateSide side = CertificateSide::row;
};

struct BlockStructure {
  std::vector<int> permutation;          // concatenation of blocks; position -> original index
  std::vector<std::vector<int>> blocks;  // diagonal blocks, in block-upper-triangular order
};

namespace detail {

// Tarjan's algorithm, iterative. Components come out sinks-first.
inline std::vector<std::vector<int>> strongly_connected_components(const Matrix& adj) {
  const int n = static_cast<int>(adj.rows());
  std::vector<int> index(n, -1), lowlink(n, 0), on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int next_index = 0;

  struct Frame {
    int v;
    int next_child;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call_stack{{root, 0}};
    index[root] = lowlink[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call_stack.empty()) {
      Frame& f = call_stack.back();
      bool descended = false;
      while (f.next_child < n) {
        const int w = f.next_child++;
        if (w == f.v || adj(f.v, w) <= 0.0) continue;
        if (index[w] == -1) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call_stack.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) lowlink[f.v] = std::min(lowlink[f.v], index[w]);
      }
      if (descended) continue;
      if (lowlink[f.v] == index[f.v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
        } while (w != f.v);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      const int v = f.v;
      call_stack.pop_back();
      if (!call_stack.empty())
        lowlink[call_stack.back().v] = std::min(lowlink[call_stack.back().v], lowlink[v]);
    }
  }
  return components;
}

// Spectral radius of an irreducible nonnegative block. The iterate runs on
// the delta-perturbed, identity-shifted matrix B + delta*J + I (strictly
// positive diagonal, hence aperiodic, so the power iteration cannot cycle),
// while the two-sided Collatz-Wielandt bounds
//   min_i (Bx)_i/x_i <= r(B) <= max_i (Bx)_i/x_i
// are evaluated on the unperturbed block, keeping the bracket certified for
// every strictly positive iterate. delta -> 0 removes the perturbation bias.
inline double irreducible_spectral_radius(const Matrix& B, double tol) {
  const int k = static_cast<int>(B.rows());
  if (k == 1) return B(0, 0);

  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double delta = 1e-3;
  Vector x = Vector::Ones(k) / std::sqrt(static_cast<double>(k));

  for (int outer = 0; outer < 80; ++outer) {
    const Matrix Bp = B + delta * Matrix::Ones(k, k) + Matrix::Identity(k, k);
    for (int it = 0; it < 1000; ++it) {
      const Vector y = B * x;
      double up = 0.0, lo = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i) {
        up = std::max(up, y(i) / x(i));
        lo = std::min(lo, y(i) / x(i));
      }
      upper = std::min(upper, up);
      lower = std::max(lower, lo);
      if (upper - lower <= tol) return 0.5 * (upper + lower);
      const Vector z = Bp * x;
      x = z / z.norm();
      if (up - lo <= 0.25 * delta) break;  // bias-limited: shrink delta
    }
    delta *= 0.125;
  }
  throw ConvergenceError("spectral radius bracket did not close within budget", upper);
}

}  // namespace detail

inline BlockStructure block_structure(const InteractionMatrix& E) {
  auto comps = detail::strongly_connected_components(E.entries);
  // Tarjan emits sinks first; edges i->j (e_ij > 0) must point from earlier
  // blocks to later ones for block upper-triangular form.
  std::reverse(comps.begin(), comps.end());
  BlockStructure bs;
  bs.blocks = std::move(comps);
  for (const auto& b : bs.blocks)
    for (int i : b) bs.permutation.push_back(i);
  return bs;
}

// r(E) to within tol, as the maximum of the spectral radii of the
// irreducible diagonal blocks.
inline double spectral_radius(const InteractionMatrix& E, double tol) {
  if (tol <= 0.0) throw PreconditionError("tol must be positive");
  const BlockStructure bs = block_structure(E);
  double r = 0.0;
  for (const auto& block : bs.blocks) {
    const int k = static_cast<int>(block.size());
    Matrix B(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) B(a, b) = E.entries(block[a], block[b]);
    r = std::max(r, detail::irreducible_spectral_radius(B, tol));
  }
  return r;
}

// True iff r(E) < 1, via positivity of the leading principal minors of I-E.
// For matrices with nonpositive off-diagonal entries this is equivalent to
// positivity of all principal minors (M-matrix criterion).
inline bool minor_test(const InteractionMatrix& E) {
  const Matrix M = Matrix::Identity(E.n, E.n) - E.entries;
  for (int k = 1; k <= E.n; ++k) {
    if (M.topLeftCorner(k, k).determinant() <= 0.0) return false;
  }
  return true;
}

enum class Verdict { criterion_holds, criterion_fails, boundary };

inline Verdict criterion_verdict(const InteractionMatrix& E, double tol = 1e-10,
                                 double boundary_tol = 1e-9) {
  const double r = spectral_radius(E, tol);
  if (std::abs(r - 1.0) <= boundary_tol) return Verdict::boundary;
  return r < 1.0 ? Verdict::criterion_holds : Verdict::criterion_fails;
}

// Perron certificate (alpha, w) with w > 0 and E w <= alpha w coordinatewise
// (or the transpose condition). alpha is taken from a Perron iterate of the
// off-diagonal delta-perturbation E + delta(J - I); delta is halved until
// alpha < 1.
inline PerronCertificate perron_certificate(const InteractionMatrix& E, double delta,
                                            CertificateSide side = CertificateSide::row) {
  const double r = spectral_radius(E, 1e-12);
  if (r >= 1.0) throw PreconditionError("no certificate exists: r(E) >= 1");
  if (delta <= 0.0) delta = 1e-6 * (1.0 - r);

  const int n = E.n;
  if (n == 1) return PerronCertificate{0.0, Vector::Ones(1), side};
  const Matrix M = side == CertificateSide::row ? E.entries : Matrix(E.entries.transpose());

  for (int attempt = 0; attempt < 200; ++attempt) {
    const Matrix Mp = M + delta * (Matrix::Ones(n, n) - Matrix::Identity(n, n));
    Vector w = Vector::Ones(n);
    for (int it = 0; it < 2000; ++it) {
      const Vector y = Mp * w;
      const Vector next = y / y.maxCoeff();
      const double gap = (next - w).cwiseAbs().maxCoeff();
      w = next;
      if (gap < 1e-14) break;
    }
    double alpha = 0.0;
    for (int i = 0; i < n; ++i) {
      alpha = std::max(alpha, (Mp.row(i) * w)(0) / w(i));
      alpha = std::max(alpha, (M.row(i) * w)(0) / w(i));
    }
    alpha *= 1.0 + 4e-16;  // a few ulps of headroom so the inequality holds exactly
    if (alpha < 1.0) {
      for (int i = 0; i < n; ++i) {
        if (!(w(i) > 0.0)) throw ConvergenceError("Perron iterate not strictly positive", w(i));
        if ((M.row(i) * w)(0) > alpha * w(i))
          throw ConvergenceError("certificate inequality violated post hoc", alpha);
      }
      return PerronCertificate{alpha, std::move(w), side};
    }
    delta *= 0.5;
  }
  throw ConvergenceError("could not find delta with r(E + delta(J-I)) < 1", delta);
}

}  // namespace subsum
