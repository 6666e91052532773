#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "subsum/marginal.hpp"
#include "support/generators.hpp"

using namespace subsum;

namespace {

FiniteProbabilitySpace uniform_space(int m) {
  return FiniteProbabilitySpace(Vector::Constant(m, 1.0 / m));
}

Partition trivial_partition(int m) { return Partition(std::vector<int>(m, 0), 1); }

Partition discrete_partition(int m) {
  std::vector<int> assignment(m);
  for (int k = 0; k < m; ++k) assignment[k] = k;
  return Partition(std::move(assignment), m);
}

// The 2x2 product space {1,2}x{1,2}; atom index = 2*row + col.
Partition row_partition() { return Partition({0, 0, 1, 1}, 2); }
Partition col_partition() { return Partition({0, 1, 0, 1}, 2); }

// Weights bounded below by factor * (uniform product measure) on an
// rows x cols product space; dyadic-free but strictly positive.
FiniteProbabilitySpace bickel_space(std::mt19937_64& rng, int rows, int cols, double factor) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int m = rows * cols;
  Vector w(m);
  for (int k = 0; k < m; ++k) w(k) = uni(rng);
  w = Vector::Constant(m, factor / m) + (1.0 - factor) * w / w.sum();
  w /= w.sum();
  return FiniteProbabilitySpace(std::move(w));
}

}  // namespace

TEST_CASE("space and partition validation") {
  CHECK_THROWS_AS(FiniteProbabilitySpace(Vector::Zero(2)), PreconditionError);
  Vector bad(2);
  bad << 0.7, 0.7;
  CHECK_THROWS_AS(FiniteProbabilitySpace(std::move(bad)), PreconditionError);
  CHECK_THROWS_AS(Partition({0, 2}, 3), PreconditionError);  // block 1 empty
  CHECK_THROWS_AS(Partition({0, 3}, 3), PreconditionError);  // out of range
}

TEST_CASE("psi prime of the trivial partition with itself is one") {
  const auto sp = uniform_space(4);
  CHECK(psi_prime(trivial_partition(4), trivial_partition(4), sp) == 1.0);
}

TEST_CASE("psi prime of independent coordinate partitions is exactly one") {
  const auto sp = uniform_space(4);  // dyadic weights: 0.25 each
  CHECK(psi_prime(row_partition(), col_partition(), sp) == 1.0);
}

TEST_CASE("psi prime of the discrete partition with itself is zero") {
  const auto sp = uniform_space(2);
  CHECK(psi_prime(discrete_partition(2), discrete_partition(2), sp) == 0.0);
}

TEST_CASE("psi prime lies in [0,1] and equals one iff independent") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 4 + trial % 5;
    const auto sp = testsupport::random_space(rng, m);
    const auto A = testsupport::random_partition(rng, m, 3);
    const auto B = testsupport::random_partition(rng, m, 3);
    const double psi = psi_prime(A, B, sp);
    CHECK(psi >= 0.0);
    CHECK(psi <= 1.0 + 1e-12);
    // Independence check: joint = product of marginals for all atom pairs.
    Matrix joint = Matrix::Zero(A.block_count, B.block_count);
    Vector ma = Vector::Zero(A.block_count), mb = Vector::Zero(B.block_count);
    for (int k = 0; k < m; ++k) {
      joint(A.block_of[k], B.block_of[k]) += sp.weights(k);
      ma(A.block_of[k]) += sp.weights(k);
      mb(B.block_of[k]) += sp.weights(k);
    }
    const bool independent = (joint - ma * mb.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
    if (independent)
      CHECK(psi == Catch::Approx(1.0).margin(1e-12));
    else
      CHECK(psi < 1.0);
  }
}

TEST_CASE("psi prime over atoms equals brute force over unions") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 3 + trial % 6;  // up to 8 atoms
    const auto sp = testsupport::random_space(rng, m);
    const auto A = testsupport::random_partition(rng, m, 4);
    const auto B = testsupport::random_partition(rng, m, 4);
    CHECK(psi_prime(A, B, sp) ==
          Catch::Approx(testsupport::psi_prime_bruteforce(A, B, sp)).margin(1e-13));
  }
}

TEST_CASE("conditional expectation of the discrete partition is the identity") {
  const auto sp = uniform_space(3);
  CHECK(operator_norm(conditional_expectation(discrete_partition(3), sp) -
                      Matrix::Identity(3, 3)) <= 1e-14);
}

TEST_CASE("conditional expectation of the trivial partition is global averaging") {
  const auto sp = uniform_space(4);
  CHECK(operator_norm(conditional_expectation(trivial_partition(4), sp) -
                      Matrix::Constant(4, 4, 0.25)) <= 1e-14);
}

TEST_CASE("conditional expectation is an idempotent norm-one projection") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 5 + trial % 4;
    const auto sp = testsupport::random_space(rng, m);
    const auto A = testsupport::random_partition(rng, m, 4);
    const Matrix M = conditional_expectation(A, sp);
    CHECK(operator_norm(M * M - M) <= 1e-12);
    CHECK(operator_norm(M * Vector::Ones(m) - Vector::Ones(m)) <= 1e-13);
    for (int s = 0; s < 50; ++s) {
      Vector xi(m);
      for (int k = 0; k < m; ++k) xi(k) = gauss(rng);
      for (auto p : {NormExponent::p1, NormExponent::p2, NormExponent::pinf})
        CHECK(weighted_norm(M * xi, sp.weights, p) <=
              weighted_norm(xi, sp.weights, p) + 1e-12);
    }
  }
}

TEST_CASE("centered projection of the trivial partition is zero") {
  const auto sp = uniform_space(3);
  CHECK(operator_norm(centered_projection(trivial_partition(3), sp)) <= 1e-14);
}

TEST_CASE("centered projection of the discrete partition removes the mean") {
  const auto sp = uniform_space(3);
  const Matrix P = centered_projection(discrete_partition(3), sp);
  const Matrix expected =
      Matrix::Identity(3, 3) - Vector::Ones(3) * sp.weights.transpose();
  CHECK(operator_norm(P - expected) <= 1e-14);
}

TEST_CASE("centered projection kills constants and fixes centered block vectors") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 5 + trial % 4;
    const auto sp = testsupport::random_space(rng, m);
    const auto A = testsupport::random_partition(rng, m, 4);
    const Matrix P = centered_projection(A, sp);
    CHECK(operator_norm(P * P - P) <= 1e-12);
    CHECK((P * Vector::Ones(m)).cwiseAbs().maxCoeff() <= 1e-13);
    const Vector xi = subsum::detail::random_centered_vector(A, sp, rng);
    CHECK((P * xi - xi).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("interaction matrix vanishes for independent partitions") {
  const MarginalSystem ms(uniform_space(4), {row_partition(), col_partition()});
  CHECK(interaction_from_psi(ms).entries.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("interaction matrix of identical nontrivial partitions hits one") {
  const MarginalSystem ms(uniform_space(4), {row_partition(), row_partition()});
  const auto E = interaction_from_psi(ms);
  CHECK(E.entries(0, 1) == Catch::Approx(1.0).margin(1e-14));
  CHECK(E.entries(1, 0) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("interaction matrix is symmetric with entries strictly inside (0,1)") {
  std::mt19937_64 rng(45);
  const auto sp = bickel_space(rng, 3, 3, 0.5);
  const Partition rows({0, 0, 0, 1, 1, 1, 2, 2, 2}, 3);
  const Partition cols({0, 1, 2, 0, 1, 2, 0, 1, 2}, 3);
  const Partition mixed({0, 0, 1, 1, 0, 1, 0, 1, 0}, 2);
  const MarginalSystem ms(sp, {rows, cols, mixed});
  const auto E = interaction_from_psi(ms);
  CHECK(operator_norm(E.entries - E.entries.transpose()) <= 1e-14);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) {
        CHECK(E.entries(i, j) > 0.0);
        CHECK(E.entries(i, j) < 1.0);
      }
}

TEST_CASE("lemma bound for independent partitions reads zero against zero") {
  std::mt19937_64 rng(46);
  const auto sp = uniform_space(4);
  for (auto p : {NormExponent::p1, NormExponent::p2, NormExponent::pinf}) {
    const auto report = lemma_bound_check(row_partition(), col_partition(), sp, p, 200, rng);
    CHECK(report.ok);
    // E(xi|B) vanishes for mean-zero A-measurable xi under independence, so
    // both sides of the inequality are (numerically) zero.
    if (p == NormExponent::p2) CHECK(report.exact_restricted_norm <= 1e-12);
  }
}

TEST_CASE("lemma bound with A equal to B forces psi prime to zero") {
  std::mt19937_64 rng(47);
  const auto sp = uniform_space(4);
  const auto A = row_partition();
  CHECK(psi_prime(A, A, sp) == 0.0);
  const auto report = lemma_bound_check(A, A, sp, NormExponent::p2, 200, rng);
  CHECK(report.ok);
  CHECK(report.exact_restricted_norm == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("lemma bound exact p=2 norm on near-product measures") {
  std::mt19937_64 rng(48);
  const Partition rows({0, 0, 0, 1, 1, 1, 2, 2, 2}, 3);
  const Partition cols({0, 1, 2, 0, 1, 2, 0, 1, 2}, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sp = bickel_space(rng, 3, 3, 0.3);
    const double factor = 1.0 - psi_prime(rows, cols, sp);
    const auto report = lemma_bound_check(rows, cols, sp, NormExponent::p2, 100, rng);
    CHECK(report.ok);
    CHECK(report.exact_restricted_norm <= factor + 1e-10);
  }
}

TEST_CASE("lemma bound sampled for p in {1,inf} on random models") {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 4 + trial % 6;
    const auto sp = testsupport::random_space(rng, m);
    const auto A = testsupport::random_partition(rng, m, 4);
    const auto B = testsupport::random_partition(rng, m, 4);
    for (auto p : {NormExponent::p1, NormExponent::pinf}) {
      const auto report = lemma_bound_check(A, B, sp, p, 300, rng);
      CHECK(report.ok);
      CHECK(report.violations == 0);
    }
  }
}

TEST_CASE("covariance inequality basic cases") {
  std::mt19937_64 rng(50);
  const auto sp = uniform_space(4);
  // Independent partitions: the covariance itself vanishes.
  const auto report =
      covariance_inequality_check(row_partition(), col_partition(), sp, NormExponent::p2, 300, rng);
  CHECK(report.ok);
  CHECK(report.worst_slack >= -1e-12);
}

TEST_CASE("covariance inequality over a grid of 2x2 measures") {
  std::mt19937_64 rng(51);
  const Partition A({0, 0, 1, 1}, 2);
  const Partition B({0, 1, 0, 1}, 2);
  for (double a : {0.05, 0.15, 0.25}) {
    for (double b : {0.1, 0.2, 0.3}) {
      Vector w(4);
      w << a, b, 0.5 - a, 0.5 - b;
      const FiniteProbabilitySpace sp{Vector(w)};
      for (auto p : {NormExponent::p1, NormExponent::p2, NormExponent::pinf}) {
        const auto report = covariance_inequality_check(A, B, sp, p, 200, rng);
        CHECK(report.ok);
      }
    }
  }
}

TEST_CASE("marginal pipeline converges instantly for independent partitions") {
  const MarginalSystem ms(uniform_space(4), {row_partition(), col_partition()});
  const auto trace = marginal_sum_projection(ms);
  REQUIRE(trace.converged);
  CHECK(trace.steps == 1);
  CHECK(trace.limit.rank() == 2);  // (2-1) + (2-1)
}

TEST_CASE("marginal pipeline on a slightly dependent model is dimension-additive") {
  std::mt19937_64 rng(52);
  const Partition rows({0, 0, 1, 1}, 2);
  const Partition cols({0, 1, 0, 1}, 2);
  const auto sp = bickel_space(rng, 2, 2, 0.9);
  const MarginalSystem ms(sp, {rows, cols});
  const auto E = interaction_from_psi(ms);
  CHECK(spectral_radius(E, 1e-10) < 1.0);
  const auto trace = marginal_sum_projection(ms);
  REQUIRE(trace.converged);
  CHECK(trace.limit.rank() == 2);
}

TEST_CASE("marginal pipeline rejects identical partitions") {
  const MarginalSystem ms(uniform_space(4), {row_partition(), row_partition()});
  CHECK_THROWS_AS(marginal_sum_projection(ms), PreconditionError);
}

TEST_CASE("marginal projections are orthogonal in the rescaled coordinates") {
  std::mt19937_64 rng(53);
  const auto sp = testsupport::random_space(rng, 7);
  const auto A = testsupport::random_partition(rng, 7, 3);
  const auto B = testsupport::random_partition(rng, 7, 3);
  MarginalSystem ms(sp, {A, B});
  if (spectral_radius(interaction_from_psi(ms), 1e-10) >= 1.0) return;
  const auto sys = build_marginal_system(ms);
  for (const auto& P : sys.projections) {
    CHECK(operator_norm(P.matrix - P.matrix.transpose()) <= 1e-10);
    CHECK(operator_norm(P.matrix * P.matrix - P.matrix) <= 1e-10);
  }
}
