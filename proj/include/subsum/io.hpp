#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subsum/errors.hpp"
#include "subsum/marginal.hpp"
#include "subsum/subspaces.hpp"
#include "subsum/sumproj.hpp"
#include "subsum/types.hpp"

// Text formats: matrices ("rows cols" then rows, 17 significant digits),
// subspace problem files, probability-model files, and CSV iteration traces.

namespace subsum {

namespace io {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

// Line-oriented tokenizer that tracks line numbers for error reporting.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line, stripped of comments (# to end of line).
  std::optional<std::string> next_line() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_number_;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
    }
    return std::nullopt;
  }

  std::string require_line(const std::string& what) {
    auto line = next_line();
    if (!line) throw ParseError("unexpected end of input, expected " + what, line_number_);
    return *line;
  }

  std::vector<double> require_numbers(int count, const std::string& what) {
    std::istringstream ss(require_line(what));
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != count)
      throw ParseError("expected " + std::to_string(count) + " numbers for " + what + ", got " +
                           std::to_string(vals.size()),
                       line_number_);
    return vals;
  }

  int require_int(const std::string& what) {
    std::istringstream ss(require_line(what));
    long long v;
    if (!(ss >> v)) throw ParseError("expected an integer for " + what, line_number_);
    std::string rest;
    if (ss >> rest) throw ParseError("trailing tokens after " + what, line_number_);
    return static_cast<int>(v);
  }

  int line_number() const { return line_number_; }

 private:
  std::istream& in_;
  int line_number_ = 0;
};

inline Matrix read_matrix_body(LineReader& reader, int rows, int cols, const std::string& what) {
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto vals = reader.require_numbers(cols, what + " row " + std::to_string(r + 1));
    for (int c = 0; c < cols; ++c) M(r, c) = vals[c];
  }
  return M;
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const Matrix& M) {
  out << M.rows() << ' ' << M.cols() << '\n';
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(M(r, c));
    }
    out << '\n';
  }
}

inline Matrix read_matrix(std::istream& in) {
  detail::LineReader reader(in);
  const auto header = reader.require_numbers(2, "matrix header \"rows cols\"");
  const int rows = static_cast<int>(header[0]), cols = static_cast<int>(header[1]);
  if (rows < 1 || cols < 1 || header[0] != rows || header[1] != cols)
    throw ParseError("matrix header must hold two positive integers", reader.line_number());
  return detail::read_matrix_body(reader, rows, cols, "matrix");
}

struct SubspaceProblem {
  int ambient_dim = 0;
  std::vector<Matrix> bases;                 // d x k_i
  std::vector<Matrix> projection_overrides;  // empty, or one d x d matrix per subspace
  std::optional<Matrix> epsilon_override;    // n x n
};

// Format:
//   subspaces
//   <d> <n>
//   then per subspace: a line <k_i> followed by d rows of k_i numbers,
//   optionally "projections" followed by n blocks of d rows of d numbers,
//   optionally "epsilon" followed by n rows of n numbers.
inline SubspaceProblem read_subspace_problem(std::istream& in) {
  detail::LineReader reader(in);
  std::istringstream kind(reader.require_line("file kind"));
  std::string tag;
  kind >> tag;
  if (tag != "subspaces")
    throw ParseError("expected file kind \"subspaces\", got \"" + tag + "\"", reader.line_number());

  const auto header = reader.require_numbers(2, "header \"d n\"");
  SubspaceProblem prob;
  prob.ambient_dim = static_cast<int>(header[0]);
  const int n = static_cast<int>(header[1]);
  if (prob.ambient_dim < 1 || n < 1)
    throw ParseError("ambient dimension and subspace count must be positive", reader.line_number());

  for (int i = 0; i < n; ++i) {
    const int k = reader.require_int("subspace dimension");
    if (k < 1 || k > prob.ambient_dim)
      throw ParseError("subspace dimension out of range", reader.line_number());
    prob.bases.push_back(detail::read_matrix_body(reader, prob.ambient_dim, k,
                                                  "subspace " + std::to_string(i + 1) + " basis"));
  }

  auto section = reader.next_line();
  auto section_tag = [](const std::string& line) {
    std::istringstream ss(line);
    std::string t;
    ss >> t;
    return t;
  };
  if (section && section_tag(*section) == "projections") {
    for (int i = 0; i < n; ++i)
      prob.projection_overrides.push_back(detail::read_matrix_body(
          reader, prob.ambient_dim, prob.ambient_dim, "projection " + std::to_string(i + 1)));
    section = reader.next_line();
  }
  if (section && section_tag(*section) == "epsilon") {
    prob.epsilon_override = detail::read_matrix_body(reader, n, n, "epsilon override");
    section = reader.next_line();
  }
  if (section)
    throw ParseError("unexpected content: \"" + *section + "\"", reader.line_number());
  return prob;
}

inline void write_subspace_problem(std::ostream& out, const SubspaceProblem& prob) {
  out << "subspaces\n" << prob.ambient_dim << ' ' << prob.bases.size() << '\n';
  for (const Matrix& B : prob.bases) {
    out << B.cols() << '\n';
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
      for (Eigen::Index c = 0; c < B.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(B(r, c));
      }
      out << '\n';
    }
  }
  auto write_rows = [&out](const Matrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(M(r, c));
      }
      out << '\n';
    }
  };
  if (!prob.projection_overrides.empty()) {
    out << "projections\n";
    for (const Matrix& P : prob.projection_overrides) write_rows(P);
  }
  if (prob.epsilon_override) {
    out << "epsilon\n";
    write_rows(*prob.epsilon_override);
  }
}

inline SubspaceSystem build_system(const SubspaceProblem& prob) {
  std::vector<Subspace> subs;
  std::vector<ProjectionOperator> projs;
  for (std::size_t i = 0; i < prob.bases.size(); ++i) {
    subs.emplace_back(prob.bases[i]);
    if (prob.projection_overrides.empty()) {
      projs.push_back(orthogonal_projection(subs.back()));
    } else {
      projs.emplace_back(prob.projection_overrides[i], prob.bases[i], ProjectionKind::oblique);
    }
  }
  return SubspaceSystem(std::move(subs), std::move(projs));
}

struct MarginalProblem {
  FiniteProbabilitySpace space;
  std::vector<Partition> partitions;
};

// Format: first line m; second line m weights; then one line per partition
// listing block assignments. Weights are validated to 1e-9 and then
// renormalized exactly.
inline MarginalProblem read_marginal_problem(std::istream& in) {
  detail::LineReader reader(in);
  const int m = reader.require_int("atom count");
  if (m < 1) throw ParseError("atom count must be positive", reader.line_number());
  const auto wvals = reader.require_numbers(m, "weights");
  Vector w(m);
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    if (!(wvals[k] > 0.0))
      throw ParseError("weights must be strictly positive", reader.line_number());
    w(k) = wvals[k];
    sum += wvals[k];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ParseError("weights must sum to 1 within 1e-9", reader.line_number());
  w /= sum;

  MarginalProblem prob;
  prob.space = FiniteProbabilitySpace(std::move(w));
  while (auto line = reader.next_line()) {
    std::istringstream ss(*line);
    std::vector<int> assignment;
    long long b;
    while (ss >> b) assignment.push_back(static_cast<int>(b));
    if (static_cast<int>(assignment.size()) != m)
      throw ParseError("partition line must list " + std::to_string(m) + " block indices",
                       reader.line_number());
    int count = 0;
    for (int v : assignment) count = std::max(count, v + 1);
    prob.partitions.emplace_back(std::move(assignment), count);
  }
  if (prob.partitions.empty()) throw ParseError("at least one partition line required");
  return prob;
}

inline void write_marginal_problem(std::ostream& out, const MarginalProblem& prob) {
  out << prob.space.size << '\n';
  for (int k = 0; k < prob.space.size; ++k) {
    if (k) out << ' ';
    out << format_double(prob.space.weights(k));
  }
  out << '\n';
  for (const auto& part : prob.partitions) {
    for (std::size_t k = 0; k < part.block_of.size(); ++k) {
      if (k) out << ' ';
      out << part.block_of[k];
    }
    out << '\n';
  }
}

// CSV trace: exact column order N, gap, residual, bound_part1, bound_part2.
inline void write_trace_csv(std::ostream& out, const IterationTrace& trace,
                            const RateBound* part1 = nullptr, const RateBound* part2 = nullptr) {
  out << "N,gap,residual,bound_part1,bound_part2\n";
  for (std::size_t k = 0; k < trace.gaps.size(); ++k) {
    const int N = static_cast<int>(k) + 1;
    out << N << ',' << format_double(trace.gaps[k]) << ',';
    out << (k < trace.residuals.size() ? format_double(trace.residuals[k]) : "nan") << ',';
    out << (part1 ? format_double(rate_bound(*part1, N)) : "nan") << ',';
    out << (part2 ? format_double(rate_bound(*part2, N)) : "nan") << '\n';
  }
}

}  // namespace io
}  // namespace subsum
