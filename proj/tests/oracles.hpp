#pragma once

// Independent reference implementations used only by the tests.

#include "adjust/common.hpp"
#include "adjust/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

namespace oracle {

using adjust::Index;
using adjust::Matrix;
using adjust::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = 0.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

/// Dense Joseph system matrix from the closed-form hat weight of every
/// (ray, pixel) pair: the ray crosses the line through a pixel row (or
/// column) at fractional index u, and the pixel gets L * max(0, 1 - |u - i|).
inline Matrix dense_joseph(const adjust::Grid2D& g, const adjust::ParallelGeometry& geo) {
  const Index J = geo.rays();
  Matrix W = Matrix::Zero(J, g.size());
  const double h = g.pixel_size;
  for (Index a = 0; a < geo.n_angles(); ++a) {
    const double c = std::cos(geo.angles[static_cast<std::size_t>(a)]);
    const double s = std::sin(geo.angles[static_cast<std::size_t>(a)]);
    for (int k = 0; k < geo.n_det; ++k) {
      const Index ray = a * geo.n_det + k;
      const double t = geo.detector_offset(k);
      // Points on the ray: t (c, s) + l (-s, c), relative to the grid origin.
      for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
          double w = 0.0;
          if (std::abs(c) >= std::abs(s)) {
            const double y = g.center_y(iy) - g.origin_y;
            const double l = (y - t * s) / c;
            const double x = t * c - l * s;
            const double u = x / h + 0.5 * (g.nx - 1);
            w = h / std::abs(c) * std::max(0.0, 1.0 - std::abs(u - ix));
          } else {
            const double x = g.center_x(ix) - g.origin_x;
            const double l = (t * c - x) / s;
            const double y = t * s + l * c;
            const double v = y / h + 0.5 * (g.ny - 1);
            w = h / std::abs(s) * std::max(0.0, 1.0 - std::abs(v - iy));
          }
          W(ray, static_cast<Index>(iy) * g.nx + ix) = w;
        }
      }
    }
  }
  return W;
}

/// Exact intersection length of every ray with every pixel square
/// (Liang-Barsky clipping per pixel).
inline Matrix dense_siddon(const adjust::Grid2D& g, const adjust::ParallelGeometry& geo) {
  Matrix W = Matrix::Zero(geo.rays(), g.size());
  const double h = g.pixel_size;
  for (Index a = 0; a < geo.n_angles(); ++a) {
    const double c = std::cos(geo.angles[static_cast<std::size_t>(a)]);
    const double s = std::sin(geo.angles[static_cast<std::size_t>(a)]);
    for (int k = 0; k < geo.n_det; ++k) {
      const double t = geo.detector_offset(k);
      const double px = g.origin_x + t * c;
      const double py = g.origin_y + t * s;
      const double dx = -s;
      const double dy = c;
      for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
          const double x0 = g.center_x(ix) - h / 2, x1 = x0 + h;
          const double y0 = g.center_y(iy) - h / 2, y1 = y0 + h;
          double lo = -std::numeric_limits<double>::infinity();
          double hi = std::numeric_limits<double>::infinity();
          bool empty = false;
          auto clip = [&](double p, double d, double a0, double a1) {
            if (std::abs(d) < 1e-300) {
              if (p < a0 || p > a1) empty = true;
              return;
            }
            double l0 = (a0 - p) / d, l1 = (a1 - p) / d;
            if (l0 > l1) std::swap(l0, l1);
            lo = std::max(lo, l0);
            hi = std::min(hi, l1);
          };
          clip(px, dx, x0, x1);
          clip(py, dy, y0, y1);
          if (!empty && hi > lo) W(a * geo.n_det + k, static_cast<Index>(iy) * g.nx + ix) = hi - lo;
        }
      }
    }
  }
  return W;
}

/// Projection of z onto {x >= 0, sum x <= 1} by enumerating every KKT
/// pattern (zero set x sum-constraint activity) and keeping the feasible one
/// with valid multipliers. Exponential; meant for m <= 4.
inline Vector capped_simplex_kkt(const Vector& z) {
  const Index m = z.size();
  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    for (int sum_active = 0; sum_active < 2; ++sum_active) {
      double lambda = 0.0;
      Index free_count = 0;
      double free_sum = 0.0;
      for (Index i = 0; i < m; ++i) {
        if (!(mask & (1u << i))) {
          ++free_count;
          free_sum += z[i];
        }
      }
      if (sum_active) {
        if (free_count == 0) continue;
        lambda = (free_sum - 1.0) / static_cast<double>(free_count);
        if (lambda < -1e-15) continue;
      }
      Vector x(m);
      bool ok = true;
      for (Index i = 0; i < m; ++i) {
        if (mask & (1u << i)) {
          x[i] = 0.0;
          if (lambda - z[i] < -1e-15) ok = false;  // multiplier of x_i >= 0
        } else {
          x[i] = z[i] - lambda;
          if (x[i] < -1e-15) ok = false;
        }
      }
      if (!ok || x.sum() > 1.0 + 1e-12) continue;
      const double obj = (x - z).squaredNorm();
      if (obj < best_obj) {
        best_obj = obj;
        best = x;
      }
    }
  }
  return best;
}

/// Projection onto {X >= 0, X 1 <= 1, X^T 1 <= 1} by accelerated projected
/// gradient ascent on the dual: X(l, w) = max(Z - l 1^T - 1 w^T, 0).
inline Matrix proj_cr_dual(const Matrix& Z, int iters = 200000, double tol = 1e-13) {
  const Index m = Z.rows(), d = Z.cols();
  Vector l = Vector::Zero(m), w = Vector::Zero(d);
  Vector l_prev = l, w_prev = w;
  const double step = 1.0 / static_cast<double>(m + d);
  auto primal = [&](const Vector& lv, const Vector& wv) {
    Matrix X = Z;
    X.colwise() -= lv;
    X.rowwise() -= wv.transpose();
    return Matrix(X.cwiseMax(0.0));
  };
  double theta = 1.0;
  for (int it = 0; it < iters; ++it) {
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    const double mom = (theta - 1.0) / theta_next;
    theta = theta_next;
    const Vector yl = l + mom * (l - l_prev);
    const Vector yw = w + mom * (w - w_prev);
    const Matrix X = primal(yl, yw);
    l_prev = l;
    w_prev = w;
    l = (yl + step * (X.rowwise().sum() - Vector::Ones(m))).cwiseMax(0.0);
    w = (yw + step * (X.colwise().sum().transpose() - Vector::Ones(d))).cwiseMax(0.0);
    if ((l - l_prev).norm() + (w - w_prev).norm() < tol && it > 100) break;
  }
  return primal(l, w);
}

/// Greedy matching via a sorted list of (error, i, j) triples.
inline std::vector<std::pair<Index, Index>> greedy_by_sort(const Matrix& E) {
  std::vector<std::tuple<double, Index, Index>> all;
  for (Index i = 0; i < E.rows(); ++i)
    for (Index j = 0; j < E.cols(); ++j) all.emplace_back(E(i, j), i, j);
  std::sort(all.begin(), all.end());
  std::vector<bool> ri(static_cast<std::size_t>(E.rows())), cj(static_cast<std::size_t>(E.cols()));
  std::vector<std::pair<Index, Index>> out;
  for (const auto& [e, i, j] : all) {
    if (ri[static_cast<std::size_t>(i)] || cj[static_cast<std::size_t>(j)]) continue;
    ri[static_cast<std::size_t>(i)] = cj[static_cast<std::size_t>(j)] = true;
    out.emplace_back(i, j);
  }
  return out;
}

/// Minimum total error over all permutations.
inline double optimal_assignment(const Matrix& E) {
  std::vector<Index> perm(static_cast<std::size_t>(E.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double tot = 0.0;
    for (Index i = 0; i < E.rows(); ++i) tot += E(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, tot);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Greedy column selection: at every step the column whose residual after
/// least-squares projection onto the chosen columns is largest.
inline std::vector<Index> greedy_columns(const Matrix& T, Index k) {
  std::vector<Index> chosen;
  for (Index step = 0; step < k; ++step) {
    Index best = -1;
    double best_norm = -1.0;
    for (Index c = 0; c < T.cols(); ++c) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      Vector r = T.col(c);
      if (!chosen.empty()) {
        Matrix B(T.rows(), static_cast<Index>(chosen.size()));
        for (std::size_t q = 0; q < chosen.size(); ++q) B.col(static_cast<Index>(q)) = T.col(chosen[q]);
        const Vector coef = B.colPivHouseholderQr().solve(r);
        r -= B * coef;
      }
      if (r.norm() > best_norm + 1e-12) {
        best_norm = r.norm();
        best = c;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

/// Lawson-Hanson active-set nonnegative least squares.
inline Vector nnls(const Matrix& A, const Vector& b, int max_iter = 2000) {
  const Index n = A.cols();
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * A.norm() * std::max(1.0, b.norm());
  for (int outer = 0; outer < max_iter; ++outer) {
    const Vector w = A.transpose() * (b - A * x);
    Index t = -1;
    double wmax = tol;
    for (Index i = 0; i < n; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w[i] > wmax) {
        wmax = w[i];
        t = i;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;
    for (int inner = 0; inner < max_iter; ++inner) {
      std::vector<Index> idx;
      for (Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
      Matrix Ap(A.rows(), static_cast<Index>(idx.size()));
      for (std::size_t q = 0; q < idx.size(); ++q) Ap.col(static_cast<Index>(q)) = A.col(idx[q]);
      const Vector zp = Ap.colPivHouseholderQr().solve(b);
      Vector z = Vector::Zero(n);
      for (std::size_t q = 0; q < idx.size(); ++q) z[idx[q]] = zp[static_cast<Index>(q)];
      bool all_pos = true;
      for (Index i : idx) all_pos = all_pos && z[i] > 0.0;
      if (all_pos) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Index i : idx)
        if (z[i] <= 0.0) alpha = std::min(alpha, x[i] / (x[i] - z[i]));
      x += alpha * (z - x);
      for (Index i : idx)
        if (x[i] <= 1e-15) {
          x[i] = 0.0;
          passive[static_cast<std::size_t>(i)] = false;
        }
    }
  }
  return x;
}

}  // namespace oracle
