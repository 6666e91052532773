#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "subsum/specmat.hpp"
#include "support/generators.hpp"

using namespace subsum;
using testsupport::dense_spectral_radius;

namespace {

InteractionMatrix make(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  Matrix E(n, n);
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) E(r, c++) = v;
    ++r;
  }
  return InteractionMatrix(std::move(E));
}

}  // namespace

TEST_CASE("interaction matrix validation") {
  CHECK_THROWS_AS(make({{1.0, 0.0}, {0.0, 0.0}}), PreconditionError);  // nonzero diagonal
  CHECK_THROWS_AS(make({{0.0, -0.5}, {0.5, 0.0}}), PreconditionError);  // negative entry
  CHECK_NOTHROW(make({{0.0, 0.5}, {0.5, 0.0}}));
}

TEST_CASE("spectral radius of the zero matrix is zero") {
  CHECK(spectral_radius(make({{0, 0}, {0, 0}}), 1e-10) == 0.0);
}

TEST_CASE("spectral radius of a 2x2 cross matrix is the geometric mean") {
  for (auto [a, b] : {std::pair{0.5, 0.5}, {2.0, 2.0}, {0.3, 1.7}, {1.0, 1.0}}) {
    const double r = spectral_radius(make({{0, a}, {b, 0}}), 1e-11);
    CHECK(r == Catch::Approx(std::sqrt(a * b)).margin(1e-10));
  }
}

TEST_CASE("spectral radius matches a dense eigensolver on random matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto E = testsupport::random_interaction(rng, 4);
    const double r = spectral_radius(E, 1e-10);
    CHECK(r == Catch::Approx(dense_spectral_radius(E.entries)).margin(1e-9));
  }
}

TEST_CASE("spectral radius handles reducible and periodic structures") {
  // Strictly upper triangular: radius 0.
  CHECK(spectral_radius(make({{0, 5, 7}, {0, 0, 3}, {0, 0, 0}}), 1e-10) ==
        Catch::Approx(0.0).margin(1e-9));
  // Periodic 2-cycle: radius 1 despite oscillating plain power iteration.
  CHECK(spectral_radius(make({{0, 1}, {1, 0}}), 1e-10) == Catch::Approx(1.0).margin(1e-9));
  // Reducible with a zero row.
  CHECK(spectral_radius(make({{0, 0.9}, {0, 0}}), 1e-10) == Catch::Approx(0.0).margin(1e-9));
  // A cycle block feeding a singleton.
  const auto E = make({{0, 1, 0}, {1, 0, 0}, {0, 1, 0}});
  CHECK(spectral_radius(E, 1e-10) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("minor test on small hand-checked examples") {
  CHECK(minor_test(make({{0, 0.5}, {0.5, 0}})));
  CHECK_FALSE(minor_test(make({{0, 1}, {1, 0}})));
  // n = 3 with all entries 0.4: the five-term expansion
  // 3*0.16 + 2*0.064 = 0.608 < 1, so the criterion holds.
  const auto E = make({{0, 0.4, 0.4}, {0.4, 0, 0.4}, {0.4, 0.4, 0}});
  const double five_term = 3 * 0.16 + 2 * 0.064;
  CHECK(five_term < 1.0);
  CHECK(minor_test(E));
}

TEST_CASE("minor test equals the spectral radius criterion on random matrices") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> n_dist(2, 6);
  int checked = 0;
  while (checked < 1000) {
    const auto E = testsupport::random_interaction(rng, n_dist(rng), 0.8);
    const double r = dense_spectral_radius(E.entries);
    if (std::abs(r - 1.0) <= 1e-6) continue;
    ++checked;
    CHECK(minor_test(E) == (r < 1.0));
    // Leading minors agree with the full principal-minor criterion.
    CHECK(minor_test(E) == testsupport::all_principal_minors_positive(E));
    // n = 2 specialization.
    if (E.n == 2) CHECK(minor_test(E) == (E.entries(0, 1) * E.entries(1, 0) < 1.0));
  }
}

TEST_CASE("criterion verdict distinguishes holds, fails and boundary") {
  CHECK(criterion_verdict(make({{0, 0.5}, {0.5, 0}})) == Verdict::criterion_holds);
  CHECK(criterion_verdict(make({{0, 2}, {2, 0}})) == Verdict::criterion_fails);
  CHECK(criterion_verdict(make({{0, 1}, {1, 0}})) == Verdict::boundary);
}

TEST_CASE("perron certificate for a symmetric circulant") {
  const auto cert = perron_certificate(make({{0, 0.5}, {0.5, 0}}), 1e-8);
  CHECK(cert.alpha == Catch::Approx(0.5).margin(1e-6));
  CHECK(cert.w(0) == Catch::Approx(cert.w(1)).epsilon(1e-10));
  CHECK((make({{0, 0.5}, {0.5, 0}}).entries * cert.w - cert.alpha * cert.w).maxCoeff() <= 0.0);
}

TEST_CASE("perron certificate for the zero matrix uses the perturbation alone") {
  for (int n : {2, 3, 5}) {
    const InteractionMatrix E(Matrix::Zero(n, n));
    const auto cert = perron_certificate(E, 0.01);
    CHECK(cert.alpha == Catch::Approx((n - 1) * 0.01).epsilon(1e-9));
    for (int i = 1; i < n; ++i) CHECK(cert.w(i) == Catch::Approx(cert.w(0)).epsilon(1e-10));
  }
}

TEST_CASE("perron certificate for a reducible matrix") {
  const auto E = make({{0, 0.9}, {0, 0}});
  const auto cert = perron_certificate(E, 1e-3);
  CHECK(cert.alpha < 1.0);
  CHECK(cert.w.minCoeff() > 0.0);
  CHECK(((E.entries * cert.w) - cert.alpha * cert.w).maxCoeff() <= 0.0);
}

TEST_CASE("perron certificate refuses r(E) >= 1") {
  CHECK_THROWS_AS(perron_certificate(make({{0, 1}, {1, 0}}), 1e-3), PreconditionError);
  CHECK_THROWS_AS(perron_certificate(make({{0, 2}, {2, 0}}), 1e-3), PreconditionError);
}

TEST_CASE("perron certificate inequality holds exactly on random matrices, both sides") {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> n_dist(2, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto E = testsupport::random_interaction(rng, n_dist(rng), 0.45);
    const double r = dense_spectral_radius(E.entries);
    if (r >= 1.0) continue;
    for (auto side : {CertificateSide::row, CertificateSide::column}) {
      const auto cert = perron_certificate(E, 0.0, side);
      const Matrix M = side == CertificateSide::row ? E.entries : Matrix(E.entries.transpose());
      for (int i = 0; i < E.n; ++i) {
        CHECK((M.row(i) * cert.w)(0) <= cert.alpha * cert.w(i) + 1e-12);
        CHECK(cert.w(i) > 0.0);
      }
      CHECK(cert.alpha >= r - 1e-9);
      CHECK(cert.alpha < 1.0);
    }
  }
}

TEST_CASE("block structure of an irreducible matrix is one block") {
  const auto bs = block_structure(make({{0, 0.1, 0.2}, {0.3, 0, 0.4}, {0.5, 0.6, 0}}));
  REQUIRE(bs.blocks.size() == 1);
  CHECK(bs.blocks[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("block structure of a strictly upper-triangular matrix is singletons in order") {
  const auto bs = block_structure(make({{0, 1, 1}, {0, 0, 1}, {0, 0, 0}}));
  REQUIRE(bs.blocks.size() == 3);
  CHECK(bs.permutation == std::vector<int>{0, 1, 2});
}

TEST_CASE("block structure matches an exhaustive block-triangular search") {
  const auto E = make({{0, 1, 0}, {1, 0, 0}, {0, 1, 0}});
  const auto bs = block_structure(E);
  REQUIRE(bs.blocks.size() == 2);
  CHECK(testsupport::block_triangular_form_valid(E.entries, bs.permutation, bs.blocks));
}

TEST_CASE("block structure is block upper-triangular with strongly connected blocks") {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> n_dist(2, 6);
  std::bernoulli_distribution keep(0.35);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_dist(rng);
    Matrix M = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && keep(rng)) M(i, j) = uni(rng);
    const InteractionMatrix E{Matrix(M)};
    const auto bs = block_structure(E);
    std::size_t total = 0;
    for (const auto& b : bs.blocks) total += b.size();
    CHECK(total == static_cast<std::size_t>(n));
    CHECK(testsupport::block_triangular_form_valid(E.entries, bs.permutation, bs.blocks));
    // Each diagonal block is strongly connected: recomputing SCCs on the
    // restricted matrix must give a single component.
    for (const auto& b : bs.blocks) {
      const int k = static_cast<int>(b.size());
      Matrix sub(k, k);
      for (int a = 0; a < k; ++a)
        for (int c = 0; c < k; ++c) sub(a, c) = E.entries(b[a], b[c]);
      CHECK(detail::strongly_connected_components(sub).size() == 1);
    }
  }
}
