#pragma once

#include "adjust/common.hpp"

namespace adjust {

/// Euclidean projection of each row onto {x >= 0, sum(x) <= 1}.
Matrix proj_rows_capped_simplex(const Eigen::Ref<const Matrix>& Z);

/// Euclidean projection of each column onto {x >= 0, sum(x) <= 1}.
Matrix proj_cols_capped_simplex(const Eigen::Ref<const Matrix>& Z);

/// Threshold lambda >= 0 with sum(max(z - lambda, 0)) <= 1, tight when the
/// clipped vector sums above one.
double capped_simplex_threshold(const Eigen::Ref<const Vector>& z);

/// Projection onto the material-map set {A >= 0, A 1 <= 1}.
inline Matrix proj_ca(const Eigen::Ref<const Matrix>& Z) { return proj_rows_capped_simplex(Z); }

struct ProjectionResult {
  Matrix X;
  int iterations = 0;
  bool converged = false;
};

struct ProjectionOptions {
  double tol = 1e-10;
  int max_iter = 500;
};

/// Projection onto the dictionary-coefficient set
///   {R >= 0, R 1 <= 1, R^T 1 <= 1}
/// by Dykstra's alternating projections between the column- and row-capped
/// sets. The returned iterate is pushed through proj_rows(proj_cols(.)) once,
/// which lands exactly in the intersection. Non-convergence is reported
/// through `converged`, not thrown.
ProjectionResult proj_cr(const Eigen::Ref<const Matrix>& Z, const ProjectionOptions& opts = {});

/// Plain alternation X <- proj_rows(proj_cols((X + Z) / 2)) from X = Z.
/// Always feasible, but its fixed point is generally not the nearest point of
/// the intersection; kept for comparison with proj_cr.
ProjectionResult proj_cr_averaged(const Eigen::Ref<const Matrix>& Z,
                                  const ProjectionOptions& opts = {});

/// Membership test for the dictionary-coefficient set.
bool in_cr(const Eigen::Ref<const Matrix>& X, double slack = 1e-9);
/// Membership test for the material-map set.
bool in_ca(const Eigen::Ref<const Matrix>& X, double slack = 1e-9);

}  // namespace adjust
