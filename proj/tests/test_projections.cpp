#include "oracles.hpp"

#include "adjust/projections.hpp"

#include <doctest.h>

using namespace adjust;

namespace {

// Random feasible point of the coefficient set.
Matrix random_feasible_cr(Index m, Index d, std::mt19937_64& rng) {
  Matrix X = oracle::random_matrix(m, d, rng);
  const double s = std::max(X.rowwise().sum().maxCoeff(), X.colwise().sum().maxCoeff());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return X / s * u(rng);
}

}  // namespace

TEST_CASE("row projection fixtures") {
  CHECK((proj_rows_capped_simplex(Matrix{{0.2, 0.3}}) - Matrix{{0.2, 0.3}}).norm() == 0.0);
  CHECK((proj_rows_capped_simplex(Matrix{{2.0, 0.0}}) - Matrix{{1.0, 0.0}}).norm() <= 1e-15);
  CHECK((proj_rows_capped_simplex(Matrix{{0.6, 0.8}}) - Matrix{{0.4, 0.6}}).norm() <= 1e-15);
  CHECK((proj_rows_capped_simplex(Matrix{{-1.0, -2.0}}) - Matrix{{0.0, 0.0}}).norm() == 0.0);
}

TEST_CASE("column projection fixtures") {
  const Matrix I = Matrix::Identity(3, 3);
  CHECK((proj_cols_capped_simplex(I) - I).norm() == 0.0);
  CHECK((proj_cols_capped_simplex(Matrix{{2.0}, {0.0}}) - Matrix{{1.0}, {0.0}}).norm() <= 1e-15);
}

TEST_CASE("single-set projections match KKT enumeration") {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (Index m = 1; m <= 4; ++m) {
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix Z = oracle::random_matrix(5, m, rng, -0.8, 1.5);
      const Matrix X = proj_rows_capped_simplex(Z);
      for (Index i = 0; i < Z.rows(); ++i) {
        const Vector ref = oracle::capped_simplex_kkt(Z.row(i).transpose());
        worst = std::max(worst, (X.row(i).transpose() - ref).cwiseAbs().maxCoeff());
      }
      const Matrix Xc = proj_cols_capped_simplex(Z.transpose());
      CHECK((Xc - proj_rows_capped_simplex(Z).transpose()).norm() == 0.0);
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("threshold handles ties") {
  CHECK(capped_simplex_threshold(Vector::Constant(4, 0.5)) == doctest::Approx(0.25));
  const Vector z = (Vector(5) << 0.7, 0.7, 0.7, 0.1, 0.1).finished();
  const Vector ref = oracle::capped_simplex_kkt(z.head(4));
  const Matrix X = proj_rows_capped_simplex(z.head(4).transpose());
  CHECK((X.row(0).transpose() - ref).norm() <= 1e-12);
}

TEST_CASE("coefficient-set projection fixtures") {
  const Matrix inside = Matrix{{0.2, 0.1, 0.0}, {0.3, 0.0, 0.5}};
  const auto r = proj_cr(inside);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK((r.X - inside).norm() == 0.0);

  const auto ones = proj_cr(Matrix::Ones(2, 2));
  CHECK(ones.converged);
  CHECK((ones.X.array() - 0.5).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("coefficient-set projection matches the dual oracle") {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix Z = oracle::random_matrix(3, 5, rng, -0.5, 1.2);
    const auto r = proj_cr(Z);
    CHECK(r.converged);
    CHECK(in_cr(r.X, 1e-9));
    const Matrix ref = oracle::proj_cr_dual(Z);
    worst = std::max(worst, (r.X - ref).norm());
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("averaged alternation is feasible but not the projection") {
  const Matrix Z = Matrix{{0.9, 0.8, 0.1}, {0.7, 0.05, 0.6}};
  const auto avg = proj_cr_averaged(Z);
  const auto dyk = proj_cr(Z);
  CHECK(in_cr(avg.X, 1e-9));
  CHECK((dyk.X - Z).norm() <= (avg.X - Z).norm() + 1e-12);
}

TEST_CASE("idempotency and membership") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix Z = oracle::random_matrix(4, 6, rng, -1.0, 2.0);
    const Matrix A = proj_ca(Z);
    CHECK(in_ca(A, 1e-9));
    CHECK((proj_ca(A) - A).norm() <= 1e-12);
    const Matrix R = proj_cr(Z).X;
    CHECK(in_cr(R, 1e-9));
    CHECK((proj_cr(R).X - R).norm() <= 1e-12);
  }
}

TEST_CASE("nonexpansiveness") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = oracle::random_matrix(3, 4, rng, -1.0, 2.0);
    const Matrix b = oracle::random_matrix(3, 4, rng, -1.0, 2.0);
    CHECK((proj_ca(a) - proj_ca(b)).norm() <= (a - b).norm() + 1e-12);
    CHECK((proj_cr(a).X - proj_cr(b).X).norm() <= (a - b).norm() + 1e-8);
  }
}

TEST_CASE("no feasible point is closer than the projection") {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 10; ++inst) {
    std::uniform_int_distribution<int> dim(1, 5);
    const Index m = dim(rng), d = dim(rng);
    const Matrix Z = oracle::random_matrix(m, d, rng, -0.5, 1.5);
    const Matrix P = proj_cr(Z).X;
    const Matrix Pa = proj_ca(Z);
    int violations = 0;
    for (int k = 0; k < 1000; ++k) {
      const Matrix X = random_feasible_cr(m, d, rng);
      if ((P - Z).norm() > (X - Z).norm() + 1e-8) ++violations;
      if ((Pa - Z).norm() > (X - Z).norm() + 1e-8) ++violations;  // C_R is a subset of C_A
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("projections reject non-finite input") {
  Matrix Z = Matrix::Ones(2, 2);
  Z(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(proj_ca(Z), Error);
  CHECK_THROWS_AS(proj_cr(Z), Error);
}
