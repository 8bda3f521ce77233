#pragma once

#include "adjust/common.hpp"
#include "adjust/projections.hpp"
#include "adjust/tomo.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace adjust {

// ---------------------------------------------------------------------------
// Dictionary-constrained objective  J(A, R) = 1/2 ||Y - W A R T||_F^2  and its
// augmented form  J~(A, R, U) = J(A, R) + <U, Y - W A R T>.
// Shapes: A (N x M), R (M x D), T (D x C), Y and U (J x C).
// ---------------------------------------------------------------------------

double objective(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                 const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& T,
                 const Eigen::Ref<const Matrix>& Y);

double objective_tilde(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                       const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& U,
                       const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y);

/// W^T (W A R T - Y - U) T^T R^T
Matrix grad_a(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
              const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& U,
              const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y);

/// A^T W^T (W A R T - Y - U) T^T
Matrix grad_r(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
              const Eigen::Ref<const Matrix>& R, const Eigen::Ref<const Matrix>& U,
              const Eigen::Ref<const Matrix>& T, const Eigen::Ref<const Matrix>& Y);

/// Dictionary-free objective 1/2 ||Y - W A F||_F^2.
double joint_objective(const TomoOperator& W, const Eigen::Ref<const Matrix>& A,
                       const Eigen::Ref<const Matrix>& F, const Eigen::Ref<const Matrix>& Y);

// ---------------------------------------------------------------------------
// Backtracking
// ---------------------------------------------------------------------------

struct BacktrackingOptions {
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_halvings = 30;
};

/// Objective value at a trial step and the squared distance moved.
struct TrialPoint {
  double value;
  double distance_sq;
};

struct BacktrackingResult {
  double step = 0.0;
  double value = 0.0;
  int trials = 0;
  bool success = false;
};

/// Tries step0, step0/2, ... and accepts the first step whose projected
/// update satisfies f(x+) <= f(x) - c ||x+ - x||^2 / step. `trial(step)` must
/// evaluate (and may cache) the projected point for that step; on success the
/// last call corresponds to the accepted step. On failure the step is 0 and
/// the caller keeps its iterate.
BacktrackingResult backtracking(double step0, double f0,
                                const std::function<TrialPoint(double)>& trial,
                                const BacktrackingOptions& opts = {});

// ---------------------------------------------------------------------------
// ADJUST via alternating accelerated proximal minimization
// ---------------------------------------------------------------------------

enum class InitMode { random, uniform, zeros };

/// Sign of the running-sum update. `ascent`: U += rho (Y - W A R T), a dual
/// ascent step on J~. `as_printed`: U += rho (W A R T - Y), which with the
/// gradients above feeds the misfit back with the wrong sign.
enum class DualUpdate { ascent, as_printed };

struct AapmConfig {
  double rho = 1e-2;
  int max_iter = 1000;
  double eps_abs_tol = 1e-4;
  double eps_rel_tol = 1e-6;
  std::uint64_t seed = 0;
  InitMode init = InitMode::random;
  DualUpdate dual_update = DualUpdate::ascent;
  BacktrackingOptions line_search;
  ProjectionOptions projection;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double eps_abs = 0.0;
  double eps_rel = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool alpha_failed = false;
  bool beta_failed = false;
  bool projection_converged = true;
};

struct AapmState {
  Matrix A;
  Matrix R;
  Matrix U;
  int iteration = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<IterationRecord> history;
};

struct AapmResult {
  Matrix A;
  Matrix R;
  Matrix F;  ///< R * T
  std::vector<IterationRecord> history;
  std::string stop_reason;
};

using AapmCallback = std::function<void(const AapmState&)>;

/// Initial (A, R) for the given mode; R is always a member of the coefficient set.
std::pair<Matrix, Matrix> aapm_initial_point(Index pixels, Index materials, Index dict_size,
                                             InitMode mode, std::uint64_t seed);

AapmResult aapm(const TomoOperator& W, const Eigen::Ref<const Matrix>& T,
                const Eigen::Ref<const Matrix>& Y, int materials, const AapmConfig& config,
                const AapmCallback& on_iteration = {});

/// Same as above from an explicit starting point.
AapmResult aapm(const TomoOperator& W, const Eigen::Ref<const Matrix>& T,
                const Eigen::Ref<const Matrix>& Y, Matrix A0, Matrix R0,
                const AapmConfig& config, const AapmCallback& on_iteration = {});

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

struct JointResult {
  Matrix A;
  Matrix F;
  std::vector<IterationRecord> history;  ///< alpha: F step, beta: A step
  std::string stop_reason;
};

struct CJointConfig {
  int max_iter = 2000;
  double tol = 1e-4;  ///< on ||Y - W A F|| / ||Y||
  std::uint64_t seed = 0;
  BacktrackingOptions line_search;
};

/// Alternating projected gradient on A >= 0, F >= 0 with Barzilai-Borwein
/// initial steps and backtracking.
JointResult cjoint(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, int materials,
                   const CJointConfig& config);
JointResult cjoint(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, Matrix A0,
                   Matrix F0, const CJointConfig& config);

struct TwoStepConfig {
  double lambda = 1e-3;
  int cg_iters = 20;
  double cg_tol = 1e-6;
  int nmf_iters = 100;
  int nmf_restarts = 10;
  std::uint64_t seed = 0;
};

/// Column-wise CG on (W^T W + lambda I) x = W^T b, started from zero.
/// Each column stops independently once ||r|| <= tol ||W^T b||.
Matrix tikhonov_cg(const TomoOperator& W, const Eigen::Ref<const Matrix>& B, double lambda,
                   int max_iter, double tol);

struct NmfResult {
  Matrix W;
  Matrix H;
  double objective = 0.0;  ///< 1/2 ||V - W H||_F^2
};

/// Alternating least squares with clipping, best of `restarts` seeded starts.
NmfResult nmf_als(const Eigen::Ref<const Matrix>& V, int rank, int iters, int restarts,
                  std::uint64_t seed);

/// Reconstruct every channel, then factor the spectral volume.
JointResult ru(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, int materials,
               const TwoStepConfig& config);

/// Factor the sinogram, then reconstruct every material sinogram.
JointResult ur(const TomoOperator& W, const Eigen::Ref<const Matrix>& Y, int materials,
               const TwoStepConfig& config);

}  // namespace adjust
