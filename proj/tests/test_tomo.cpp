#include "oracles.hpp"

#include "adjust/tomo.hpp"

#include <doctest.h>

#include <numbers>

using namespace adjust;

namespace {

TomoOperator make_op(int n, int angles, int n_det = 0, double spacing = 1.0) {
  if (n_det == 0) n_det = static_cast<int>(std::ceil(std::sqrt(2.0) * n));
  return TomoOperator(Grid2D(n, n), ParallelGeometry(ParallelGeometry::equidistant(angles, 0.0, std::numbers::pi),
                                                     n_det, spacing));
}

}  // namespace

TEST_CASE("equidistant angles exclude the endpoint") {
  const auto a = ParallelGeometry::equidistant(4, 0.0, std::numbers::pi);
  REQUIRE(a.size() == 4);
  CHECK(a[0] == 0.0);
  CHECK(a[3] == doctest::Approx(0.75 * std::numbers::pi));
}

TEST_CASE("grid and geometry reject bad parameters") {
  CHECK_THROWS_AS(Grid2D(0, 4), Error);
  CHECK_THROWS_AS(Grid2D(4, 4, -1.0), Error);
  CHECK_THROWS_AS(ParallelGeometry({}, 4), Error);
  CHECK_THROWS_AS(ParallelGeometry({0.0}, 0), Error);
  CHECK_THROWS_AS(ParallelGeometry({0.0}, 4, 0.0), Error);
}

TEST_CASE("constant image at angle 0 integrates to the column length") {
  const int n = 8;
  TomoOperator W(Grid2D(n, n), ParallelGeometry({0.0}, n, 1.0));
  const Vector y = W.forward(Vector::Ones(n * n));
  for (int k = 0; k < n; ++k) CHECK(y[k] == doctest::Approx(8.0).epsilon(1e-12));

  // Exact ray-pixel lengths agree for an axis-aligned ray.
  const Matrix S = oracle::dense_siddon(W.grid(), W.geometry());
  const Vector ys = S * Vector::Ones(n * n);
  for (int k = 0; k < n; ++k) CHECK(ys[k] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("zero image and missing rays give exact zeros") {
  TomoOperator W = make_op(8, 5);
  CHECK(W.forward(Vector::Zero(64)).cwiseAbs().maxCoeff() == 0.0);
  // Detector far outside the grid.
  TomoOperator far(Grid2D(4, 4), ParallelGeometry({0.0, 0.7}, 2, 50.0));
  CHECK(far.forward(Vector::Ones(16)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches the dense hat-function oracle") {
  for (int angles : {1, 7, 12}) {
    TomoOperator W = make_op(9, angles, 13, 0.8);
    const Matrix D = oracle::dense_joseph(W.grid(), W.geometry());
    const Matrix S = Matrix(W.matrix());
    CHECK((S - D).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("weights conserve the ray length through the grid interior") {
  // A ray through the grid center crosses every row (or column) once, so its
  // weights sum to n * h / max(|cos|, |sin|).
  const int n = 16;
  const std::vector<double> angles = {0.0, 0.3, 0.9, 1.4, 2.2, 3.0};
  TomoOperator W(Grid2D(n, n), ParallelGeometry(angles, 1, 1.0));
  const Vector y = W.forward(Vector::Ones(n * n));
  for (std::size_t a = 0; a < angles.size(); ++a) {
    const double expect = n / std::max(std::abs(std::cos(angles[a])), std::abs(std::sin(angles[a])));
    CHECK(y[static_cast<Index>(a)] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("dot-product test") {
  TomoOperator W = make_op(16, 12);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = oracle::random_matrix(W.domain_size(), 1, rng, -1.0, 1.0);
    const Vector y = oracle::random_matrix(W.range_size(), 1, rng, -1.0, 1.0);
    const double lhs = W.forward(x).dot(y);
    const double rhs = x.dot(W.adjoint(y));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("linearity and nonnegativity") {
  TomoOperator W = make_op(12, 9);
  std::mt19937_64 rng(3);
  const Vector a = oracle::random_matrix(W.domain_size(), 1, rng);
  const Vector b = oracle::random_matrix(W.domain_size(), 1, rng);
  const Vector lhs = W.forward(Vector(2.5 * a - 1.5 * b));
  const Vector rhs = 2.5 * W.forward(a) - 1.5 * W.forward(b);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  CHECK(W.forward(a).minCoeff() >= 0.0);
  CHECK(W.adjoint(Vector(W.forward(a))).minCoeff() >= 0.0);
}

TEST_CASE("matrix operands act column by column") {
  TomoOperator W = make_op(10, 6);
  std::mt19937_64 rng(11);
  const Matrix X = oracle::random_matrix(W.domain_size(), 3, rng);
  const Matrix Y = W.forward(X);
  for (Index c = 0; c < 3; ++c) CHECK((Y.col(c) - W.forward(Vector(X.col(c)))).norm() == 0.0);
  const Matrix Z = W.adjoint(Y);
  for (Index c = 0; c < 3; ++c) CHECK((Z.col(c) - W.adjoint(Vector(Y.col(c)))).norm() == 0.0);
}

TEST_CASE("shape and finiteness errors") {
  TomoOperator W = make_op(8, 4);
  CHECK_THROWS_AS(W.forward(Vector::Ones(10)), Error);
  CHECK_THROWS_AS(W.adjoint(Vector::Ones(10)), Error);
  Vector bad = Vector::Ones(64);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(W.forward(bad), Error);
}

TEST_CASE("repeated application is bit-identical") {
  TomoOperator W = make_op(16, 10);
  std::mt19937_64 rng(5);
  const Matrix X = oracle::random_matrix(W.domain_size(), 2, rng);
  const Matrix a = W.forward(X);
  const Matrix b = W.forward(X);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}
