#include "adjust/solvers.hpp"

#include <limits>
#include <random>

namespace adjust {

Matrix tikhonov_cg(const TomoOperator& W, const Eigen::Ref<const Matrix>& B, double lambda,
                   int max_iter, double tol) {
  require(B.rows() == W.range_size(), "tikhonov_cg: right-hand side must have J rows");
  require(lambda >= 0.0, "tikhonov_cg: lambda must be >= 0");
  const Index k = B.cols();
  Matrix X = Matrix::Zero(W.domain_size(), k);
  Matrix R = W.adjoint(B);
  const Eigen::RowVectorXd target = tol * R.colwise().norm();
  Matrix P = R;
  Eigen::RowVectorXd rs = R.colwise().squaredNorm();
  std::vector<bool> active(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) active[static_cast<std::size_t>(c)] = std::sqrt(rs[c]) > target[c];

  for (int it = 0; it < max_iter; ++it) {
    bool any = false;
    for (Index c = 0; c < k; ++c) {
      if (!active[static_cast<std::size_t>(c)]) P.col(c).setZero();
      else any = true;
    }
    if (!any) break;
    const Matrix Q = W.adjoint(W.forward(P)) + lambda * P;
    for (Index c = 0; c < k; ++c) {
      if (!active[static_cast<std::size_t>(c)]) continue;
      const double pq = P.col(c).dot(Q.col(c));
      if (pq <= 0.0) {
        active[static_cast<std::size_t>(c)] = false;
        continue;
      }
      const double a = rs[c] / pq;
      X.col(c) += a * P.col(c);
      R.col(c) -= a * Q.col(c);
      const double rs_new = R.col(c).squaredNorm();
      if (std::sqrt(rs_new) <= target[c]) active[static_cast<std::size_t>(c)] = false;
      P.col(c) = R.col(c) + (rs_new / rs[c]) * P.col(c);
      rs[c] = rs_new;
    }
  }
  return X;
}

namespace {

// Least-squares solve of (G + eps I) X = B for a small SPD Gram matrix G.
Matrix ridge_solve(const Matrix& G, const Matrix& B) {
  const double eps = 1e-12 * (G.trace() / static_cast<double>(G.rows()) + 1e-300);
  Matrix Gr = G;
  Gr.diagonal().array() += eps;
  return Gr.ldlt().solve(B);
}

}  // namespace

NmfResult nmf_als(const Eigen::Ref<const Matrix>& V, int rank, int iters, int restarts,
                  std::uint64_t seed) {
  require(rank >= 1, "nmf_als: rank must be >= 1");
  require(iters >= 1 && restarts >= 1, "nmf_als: iterations and restarts must be >= 1");
  require(V.allFinite(), "nmf_als: non-finite input");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  NmfResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Matrix Wf(V.rows(), rank);
    for (Index j = 0; j < Wf.cols(); ++j)
      for (Index i = 0; i < Wf.rows(); ++i) Wf(i, j) = unit(rng);
    Matrix H;
    for (int it = 0; it < iters; ++it) {
      H = ridge_solve(Wf.transpose() * Wf, Wf.transpose() * V).cwiseMax(0.0);
      Wf = ridge_solve(H * H.transpose(), H * V.transpose()).transpose().cwiseMax(0.0);
    }
    const double obj = 0.5 * (V - Wf * H).squaredNorm();
    if (obj < best.objective) {
      best.objective = obj;
      best.W = std::move(Wf);
      best.H = std::move(H);
    }
  }
  return best;
}

JointResult ru(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, int materials,
               const TwoStepConfig& config) {
  require(materials >= 1, "ru: materials must be >= 1");
  require_shape(Y, W.range_size(), Y.cols(), "ru: Y");
  const Matrix volume =
      tikhonov_cg(W, Y, config.lambda, config.cg_iters, config.cg_tol).cwiseMax(0.0);
  auto nmf = nmf_als(volume, materials, config.nmf_iters, config.nmf_restarts, config.seed);
  JointResult out;
  out.A = std::move(nmf.W);
  out.F = std::move(nmf.H);
  out.stop_reason = "done";
  return out;
}

JointResult ur(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, int materials,
               const TwoStepConfig& config) {
  require(materials >= 1, "ur: materials must be >= 1");
  require_shape(Y, W.range_size(), Y.cols(), "ur: Y");
  auto nmf = nmf_als(Y, materials, config.nmf_iters, config.nmf_restarts, config.seed);
  JointResult out;
  out.A = tikhonov_cg(W, nmf.W, config.lambda, config.cg_iters, config.cg_tol).cwiseMax(0.0);
  out.F = std::move(nmf.H);
  out.stop_reason = "done";
  return out;
}

}  // namespace adjust
