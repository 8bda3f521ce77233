#include "adjust/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace adjust {

namespace {

void check_adjust_shapes(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                         const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& T,
                         const Eigen::Ref<const Matrix>& Y) {
  require_shape(A, W.domain_size(), A.cols(), "A");
  require_shape(R, A.cols(), T.rows(), "R");
  require_shape(Y, W.range_size(), T.cols(), "Y");
}

// 1/2 ||Q - Y||^2 + <U, Y - Q> for a predicted sinogram Q.
double augmented_misfit(const Matrix& Q, const Eigen::Ref<const Matrix>& Y,
                        const Eigen::Ref<const Matrix>& U) {
  const Matrix diff = Q - Y;
  return 0.5 * diff.squaredNorm() - (U.array() * diff.array()).sum();
}

double spectral_norm_sq(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const double s = svd.singularValues()(0);
  return s * s;
}

// Largest eigenvalue of W^T W by power iteration.
double operator_norm_sq(const TomoOperator& W, int iters = 30) {
  Vector x = Vector::Ones(W.domain_size()).normalized();
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vector y = W.adjoint(W.forward(x));
    lambda = y.norm();
    if (lambda == 0.0) return 0.0;
    x = y / lambda;
  }
  return lambda;
}

double safe_inverse(double lipschitz) {
  return lipschitz > 1e-300 ? 1.0 / lipschitz : 1.0;
}

void require_finite(double v, const char* what, int iter) {
  if (!std::isfinite(v))
    throw Error(std::string(what) + ": non-finite objective at iteration " + std::to_string(iter));
}

}  // namespace

double objective(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                 const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& T,
                 const Eigen::Ref<const Matrix>& Y) {
  check_adjust_shapes(W, A, R, T, Y);
  return 0.5 * (Y - W.forward(A) * (R * T)).squaredNorm();
}

double objective_tilde(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                       const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& U,
                       const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y) {
  check_adjust_shapes(W, A, R, T, Y);
  require_shape(U, Y.rows(), Y.cols(), "U");
  return augmented_misfit(W.forward(A) * (R * T), Y, U);
}

Matrix grad_a(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
              const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& U,
              const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y) {
  check_adjust_shapes(W, A, R, T, Y);
  require_shape(U, Y.rows(), Y.cols(), "U");
  const Matrix S = R * T;
  const Matrix E = W.forward(A) * S - Y - U;
  return W.adjoint(E * S.transpose());
}

Matrix grad_r(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
              const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& U,
              const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y) {
  check_adjust_shapes(W, A, R, T, Y);
  require_shape(U, Y.rows(), Y.cols(), "U");
  const Matrix P = W.forward(A);
  const Matrix E = P * (R * T) - Y - U;
  return P.transpose() * E * T.transpose();
}

double joint_objective(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                       const Eigen::Ref<const Matrix>& F, const Eigen::Ref<const Matrix>& Y) {
  require_shape(A, W.domain_size(), A.cols(), "A");
  require_shape(F, A.cols(), Y.cols(), "F");
  require_shape(Y, W.range_size(), Y.cols(), "Y");
  return 0.5 * (Y - W.forward(A) * F).squaredNorm();
}

BacktrackingResult backtracking(double step0, double f0,
                                const std::function<TrialPoint(double)>& trial,
                                const BacktrackingOptions& opts) {
  require(step0 > 0.0 && std::isfinite(step0), "backtracking: initial step must be > 0");
  BacktrackingResult res;
  double step = step0;
  for (int k = 0; k <= opts.max_halvings; ++k) {
    const TrialPoint p = trial(step);
    ++res.trials;
    if (std::isfinite(p.value) &&
        p.value <= f0 - opts.sufficient_decrease * p.distance_sq / step) {
      res.step = step;
      res.value = p.value;
      res.success = true;
      return res;
    }
    step *= opts.shrink;
  }
  res.step = 0.0;
  res.value = f0;
  return res;
}

std::pair<Matrix, Matrix> aapm_initial_point(Index pixels, Index materials, Index dict_size,
                                             InitMode mode, std::uint64_t seed) {
  require(materials >= 1 && materials <= dict_size,
          "aapm: need 1 <= materials <= dictionary size");
  switch (mode) {
    case InitMode::zeros:
      return {Matrix::Zero(pixels, materials), Matrix::Zero(materials, dict_size)};
    case InitMode::uniform: {
      Matrix A = Matrix::Constant(pixels, materials, 0.5 / static_cast<double>(materials));
      Matrix R = proj_cr(Matrix::Constant(materials, dict_size,
                                          0.5 / static_cast<double>(dict_size)))
                     .X;
      return {std::move(A), std::move(R)};
    }
    case InitMode::random:
    default: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Matrix A(pixels, materials);
      for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i) A(i, j) = unit(rng) / static_cast<double>(materials);
      Matrix R(materials, dict_size);
      for (Index j = 0; j < R.cols(); ++j)
        for (Index i = 0; i < R.rows(); ++i) R(i, j) = unit(rng) / static_cast<double>(dict_size);
      return {std::move(A), proj_cr(R).X};
    }
  }
}

AapmResult aapm(const TomoOperator& W, const Eigen::Ref<const Matrix>& T,
                const Eigen::Ref<const Matrix>& Y, int materials, const AapmConfig& config,
                const AapmCallback& on_iteration) {
  auto [A0, R0] =
      aapm_initial_point(W.domain_size(), materials, T.rows(), config.init, config.seed);
  return aapm(W, T, Y, std::move(A0), std::move(R0), config, on_iteration);
}

AapmResult aapm(const TomoOperator& W, const Eigen::Ref<const Matrix>& T,
                const Eigen::Ref<const Matrix>& Y, Matrix A0, Matrix R0,
                const AapmConfig& config, const AapmCallback& on_iteration) {
  check_adjust_shapes(W, A0, R0, T, Y);
  require(A0.cols() <= T.rows(), "aapm: number of materials exceeds dictionary size");
  require(config.rho >= 0.0 && config.rho < 1.0, "aapm: rho must lie in [0, 1)");
  require(config.max_iter >= 1, "aapm: max_iter must be >= 1");
  require(T.allFinite() && Y.allFinite(), "aapm: non-finite T or Y");

  AapmState st;
  st.A = std::move(A0);
  st.R = std::move(R0);
  st.U = Matrix::Zero(Y.rows(), Y.cols());

  Matrix P = W.forward(st.A);  // W A, kept in sync with st.A
  const double y_norm = Y.norm();

  // Initial steps from Lipschitz bounds of the two partial gradients; later
  // iterations warm-start from twice the last accepted step.
  const double w_norm_sq = operator_norm_sq(W);
  const double t_norm_sq = spectral_norm_sq(T);
  double alpha_start = safe_inverse(spectral_norm_sq(P) * t_norm_sq);
  double beta_start = safe_inverse(w_norm_sq * spectral_norm_sq(st.R * T));

  AapmResult out;
  out.stop_reason = "max_iter";
  for (int k = 1; k <= config.max_iter; ++k) {
    IterationRecord rec;
    rec.iter = k;

    // Dictionary coefficients.
    const Matrix RT = st.R * T;
    const Matrix grad_R = P.transpose() * (P * RT - Y - st.U) * T.transpose();
    const double fR0 = augmented_misfit(P * RT, Y, st.U);
    require_finite(fR0, "aapm", k);
    Matrix R_trial;
    bool proj_ok = true;
    const auto r_search = backtracking(
        alpha_start, fR0,
        [&](double a) {
          auto pr = proj_cr(st.R - a * grad_R, config.projection);
          proj_ok = pr.converged;
          R_trial = std::move(pr.X);
          return TrialPoint{augmented_misfit(P * (R_trial * T), Y, st.U),
                            (R_trial - st.R).squaredNorm()};
        },
        config.line_search);
    Matrix R_next = r_search.success ? std::move(R_trial) : st.R;
    rec.alpha = r_search.step;
    rec.alpha_failed = !r_search.success;
    rec.projection_converged = proj_ok || !r_search.success;
    if (r_search.success) alpha_start = 2.0 * r_search.step;

    // Material maps with the updated coefficients.
    const Matrix S = R_next * T;
    const Matrix PS = P * S;
    const Matrix grad_A = W.adjoint((PS - Y - st.U) * S.transpose());
    const double fA0 = augmented_misfit(PS, Y, st.U);
    require_finite(fA0, "aapm", k);
    Matrix A_trial;
    Matrix P_trial;
    const auto a_search = backtracking(
        beta_start, fA0,
        [&](double b) {
          A_trial = proj_ca(st.A - b * grad_A);
          P_trial = W.forward(A_trial);
          return TrialPoint{augmented_misfit(P_trial * S, Y, st.U),
                            (A_trial - st.A).squaredNorm()};
        },
        config.line_search);
    rec.beta = a_search.step;
    rec.beta_failed = !a_search.success;
    if (a_search.success) beta_start = 2.0 * a_search.step;

    const double dR = (R_next - st.R).norm();
    double dA = 0.0;
    if (a_search.success) {
      dA = (A_trial - st.A).norm();
      st.A = std::move(A_trial);
      P = std::move(P_trial);
    }
    st.R = std::move(R_next);

    // Running sum of errors.
    const Matrix residual = P * S - Y;
    if (config.dual_update == DualUpdate::ascent) st.U -= config.rho * residual;
    else st.U += config.rho * residual;

    const double res_norm = residual.norm();
    rec.objective = 0.5 * res_norm * res_norm;
    require_finite(rec.objective, "aapm", k);
    rec.eps_abs = y_norm > 0.0 ? res_norm / y_norm : res_norm;
    rec.eps_rel = dA + dR;

    st.iteration = k;
    st.alpha = rec.alpha;
    st.beta = rec.beta;
    st.history.push_back(rec);
    if (on_iteration) on_iteration(st);

    if (rec.eps_abs <= config.eps_abs_tol) {
      out.stop_reason = "eps_abs";
      break;
    }
    if (rec.eps_rel <= config.eps_rel_tol) {
      out.stop_reason = "eps_rel";
      break;
    }
  }

  out.F = st.R * T;
  out.A = std::move(st.A);
  out.R = std::move(st.R);
  out.history = std::move(st.history);
  return out;
}

JointResult cjoint(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, int materials,
                   const CJointConfig& config) {
  require(materials >= 1, "cjoint: materials must be >= 1");
  require_shape(Y, W.range_size(), Y.cols(), "cjoint: Y");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix A(W.domain_size(), materials);
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i) A(i, j) = unit(rng) / static_cast<double>(materials);
  Matrix F(materials, Y.cols());
  for (Index j = 0; j < F.cols(); ++j)
    for (Index i = 0; i < F.rows(); ++i) F(i, j) = unit(rng);
  // Least-squares scale so W A F starts at the magnitude of Y.
  const Matrix Q = W.forward(A) * F;
  const double qq = Q.squaredNorm();
  if (qq > 0.0) {
    const double s = (Q.array() * Y.array()).sum() / qq;
    if (s > 0.0) F *= s;
  }
  return cjoint(W, Y, std::move(A), std::move(F), config);
}

JointResult cjoint(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, Matrix A, Matrix F,
                   const CJointConfig& config) {
  require_shape(A, W.domain_size(), A.cols(), "cjoint: A");
  require_shape(F, A.cols(), Y.cols(), "cjoint: F");
  require_shape(Y, W.range_size(), Y.cols(), "cjoint: Y");
  require(config.max_iter >= 1, "cjoint: max_iter must be >= 1");

  const double y_norm = Y.norm();
  Matrix P = W.forward(A);
  double f_step = safe_inverse(spectral_norm_sq(P));
  double a_step = safe_inverse(operator_norm_sq(W) * spectral_norm_sq(F));

  // Previous iterate and gradient per block for Barzilai-Borwein steps.
  Matrix F_prev, gF_prev, A_prev, gA_prev;
  auto bb_step = [](const Matrix& x, const Matrix& x_prev, const Matrix& g, const Matrix& g_prev,
                    double fallback) {
    if (x_prev.size() == 0) return fallback;
    const double ss = (x - x_prev).squaredNorm();
    const double sy = ((x - x_prev).array() * (g - g_prev).array()).sum();
    if (sy <= 0.0 || ss == 0.0) return fallback;
    return std::clamp(ss / sy, 1e-3 * fallback, 1e3 * fallback);
  };

  JointResult out;
  out.stop_reason = "max_iter";
  for (int k = 1; k <= config.max_iter; ++k) {
    IterationRecord rec;
    rec.iter = k;

    // Spectra.
    const Matrix gF = P.transpose() * (P * F - Y);
    const double f0 = 0.5 * (P * F - Y).squaredNorm();
    require_finite(f0, "cjoint", k);
    const double f_try = bb_step(F, F_prev, gF, gF_prev, f_step);
    Matrix F_trial;
    const auto fs = backtracking(
        f_try, f0,
        [&](double s) {
          F_trial = (F - s * gF).cwiseMax(0.0);
          return TrialPoint{0.5 * (P * F_trial - Y).squaredNorm(), (F_trial - F).squaredNorm()};
        },
        config.line_search);
    double dF = 0.0;
    F_prev = F;
    gF_prev = gF;
    if (fs.success) {
      dF = (F_trial - F).norm();
      F = std::move(F_trial);
      f_step = fs.step;
    }
    rec.alpha = fs.step;
    rec.alpha_failed = !fs.success;

    // Maps.
    const Matrix E = P * F - Y;
    const Matrix gA = W.adjoint(E * F.transpose());
    const double a0 = 0.5 * E.squaredNorm();
    const double a_try = bb_step(A, A_prev, gA, gA_prev, a_step);
    Matrix A_trial, P_trial;
    const auto as = backtracking(
        a_try, a0,
        [&](double s) {
          A_trial = (A - s * gA).cwiseMax(0.0);
          P_trial = W.forward(A_trial);
          return TrialPoint{0.5 * (P_trial * F - Y).squaredNorm(), (A_trial - A).squaredNorm()};
        },
        config.line_search);
    double dA = 0.0;
    A_prev = A;
    gA_prev = gA;
    if (as.success) {
      dA = (A_trial - A).norm();
      A = std::move(A_trial);
      P = std::move(P_trial);
      a_step = as.step;
    }
    rec.beta = as.step;
    rec.beta_failed = !as.success;

    const double res = (P * F - Y).norm();
    rec.objective = 0.5 * res * res;
    require_finite(rec.objective, "cjoint", k);
    rec.eps_abs = y_norm > 0.0 ? res / y_norm : res;
    rec.eps_rel = dA + dF;
    out.history.push_back(rec);

    if (rec.eps_abs <= config.tol) {
      out.stop_reason = "tol";
      break;
    }
    if (!fs.success && !as.success) {
      out.stop_reason = "stalled";
      break;
    }
  }
  out.A = std::move(A);
  out.F = std::move(F);
  return out;
}

}  // namespace adjust
