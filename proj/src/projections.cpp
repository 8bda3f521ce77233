#include "adjust/projections.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace adjust {

double capped_simplex_threshold(const Eigen::Ref<const Vector>& z) {
  double clip_sum = 0.0;
  for (Index i = 0; i < z.size(); ++i) clip_sum += std::max(z[i], 0.0);
  if (clip_sum <= 1.0) return 0.0;

  // sum(max(z - lambda, 0)) is piecewise linear with breakpoints at the
  // entries of z. Walk the sorted breakpoints to the segment holding the root
  // and solve the linear piece there.
  std::vector<double> u(z.data(), z.data() + z.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double lambda = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] > candidate) lambda = candidate;
    else break;
  }
  return std::max(lambda, 0.0);
}

Matrix proj_rows_capped_simplex(const Eigen::Ref<const Matrix>& Z) {
  require(Z.allFinite(), "proj_rows_capped_simplex: non-finite input");
  Matrix X(Z.rows(), Z.cols());
  for (Index i = 0; i < Z.rows(); ++i) {
    const Vector row = Z.row(i).transpose();
    const double lambda = capped_simplex_threshold(row);
    X.row(i) = (row.array() - lambda).max(0.0).matrix().transpose();
  }
  return X;
}

Matrix proj_cols_capped_simplex(const Eigen::Ref<const Matrix>& Z) {
  require(Z.allFinite(), "proj_cols_capped_simplex: non-finite input");
  Matrix X(Z.rows(), Z.cols());
  for (Index j = 0; j < Z.cols(); ++j) {
    const Vector col = Z.col(j);
    const double lambda = capped_simplex_threshold(col);
    X.col(j) = (col.array() - lambda).max(0.0).matrix();
  }
  return X;
}

ProjectionResult proj_cr(const Eigen::Ref<const Matrix>& Z, const ProjectionOptions& opts) {
  require(Z.allFinite(), "proj_cr: non-finite input");
  require(opts.tol > 0.0, "proj_cr: tol must be > 0");
  require(opts.max_iter >= 1, "proj_cr: max_iter must be >= 1");

  ProjectionResult res;
  if (in_cr(Z, 0.0)) {
    res.X = Z;
    res.converged = true;
    return res;
  }

  Matrix x = Z;
  Matrix p = Matrix::Zero(Z.rows(), Z.cols());
  Matrix q = Matrix::Zero(Z.rows(), Z.cols());
  for (int t = 1; t <= opts.max_iter; ++t) {
    const Matrix y = proj_cols_capped_simplex(x + p);
    p += x - y;
    Matrix x_next = proj_rows_capped_simplex(y + q);
    q += y - x_next;
    const double step = (x_next - x).norm();
    const double gap = (x_next - y).norm();
    x = std::move(x_next);
    res.iterations = t;
    if (step <= opts.tol && gap <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.X = proj_rows_capped_simplex(proj_cols_capped_simplex(x));
  return res;
}

ProjectionResult proj_cr_averaged(const Eigen::Ref<const Matrix>& Z,
                                  const ProjectionOptions& opts) {
  require(Z.allFinite(), "proj_cr_averaged: non-finite input");
  ProjectionResult res;
  Matrix x = Z;
  for (int t = 1; t <= opts.max_iter; ++t) {
    Matrix next = proj_rows_capped_simplex(proj_cols_capped_simplex(0.5 * (x + Z)));
    const double step = (next - x).norm();
    x = std::move(next);
    res.iterations = t;
    if (step <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.X = std::move(x);
  return res;
}

bool in_cr(const Eigen::Ref<const Matrix>& X, double slack) {
  if (!X.allFinite() || (X.array() < 0.0).any()) return false;
  if (X.size() == 0) return true;
  return (X.rowwise().sum().array() <= 1.0 + slack).all() &&
         (X.colwise().sum().array() <= 1.0 + slack).all();
}

bool in_ca(const Eigen::Ref<const Matrix>& X, double slack) {
  if (!X.allFinite() || (X.array() < 0.0).any()) return false;
  if (X.size() == 0) return true;
  return (X.rowwise().sum().array() <= 1.0 + slack).all();
}

}  // namespace adjust
