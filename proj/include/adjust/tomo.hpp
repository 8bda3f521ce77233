#pragma once

#include "adjust/common.hpp"

#include <Eigen/SparseCore>

#include <type_traits>
#include <vector>

namespace adjust {

/// Square-pixel image grid. Pixel (ix, iy) maps to linear index iy * nx + ix
/// and has its center at origin + ((ix - (nx-1)/2), (iy - (ny-1)/2)) * pixel_size.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double pixel_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  Grid2D() = default;
  Grid2D(int nx_, int ny_, double pixel_size_ = 1.0, double ox = 0.0, double oy = 0.0);

  Index size() const { return static_cast<Index>(nx) * ny; }
  double center_x(int ix) const { return origin_x + (ix - 0.5 * (nx - 1)) * pixel_size; }
  double center_y(int iy) const { return origin_y + (iy - 0.5 * (ny - 1)) * pixel_size; }

  /// Same physical extent, `factor` times more pixels per axis.
  Grid2D refined(int factor) const;

  bool operator==(const Grid2D&) const = default;
};

/// Parallel-beam acquisition. Ray j = a * n_det + k passes through detector
/// offset t_k = (k - (n_det-1)/2) * det_spacing along (cos a, sin a), with
/// direction (-sin a, cos a).
struct ParallelGeometry {
  std::vector<double> angles;
  int n_det = 0;
  double det_spacing = 1.0;

  ParallelGeometry() = default;
  ParallelGeometry(std::vector<double> angles_, int n_det_, double det_spacing_ = 1.0);

  /// `count` equidistant angles in [start, stop) (endpoint excluded).
  static std::vector<double> equidistant(int count, double start, double stop);

  Index n_angles() const { return static_cast<Index>(angles.size()); }
  Index rays() const { return n_angles() * n_det; }
  double detector_offset(int k) const { return (k - 0.5 * (n_det - 1)) * det_spacing; }
};

/// Joseph-method parallel-beam projector. The weights are enumerated once into
/// a sparse matrix, so forward and adjoint are an exactly matched pair.
class TomoOperator {
 public:
  TomoOperator(Grid2D grid, ParallelGeometry geometry);

  const Grid2D& grid() const { return grid_; }
  const ParallelGeometry& geometry() const { return geometry_; }
  Index domain_size() const { return grid_.size(); }
  Index range_size() const { return geometry_.rays(); }

  using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// (N) -> (J) for vectors, column-wise (N x K) -> (J x K) for matrices.
  template <class D>
  auto forward(const Eigen::MatrixBase<D>& x) const {
    if constexpr (D::ColsAtCompileTime == 1) return forward_vector(x);
    else return forward_matrix(x);
  }
  /// (J) -> (N), or column-wise (J x K) -> (N x K).
  template <class D>
  auto adjoint(const Eigen::MatrixBase<D>& y) const {
    if constexpr (D::ColsAtCompileTime == 1) return adjoint_vector(y);
    else return adjoint_matrix(y);
  }

  Vector forward_vector(const Eigen::Ref<const Vector>& image) const;
  Vector adjoint_vector(const Eigen::Ref<const Vector>& sino) const;
  Matrix forward_matrix(const Eigen::Ref<const Matrix>& images) const;
  Matrix adjoint_matrix(const Eigen::Ref<const Matrix>& sinos) const;

  /// J x N system matrix.
  const SparseMatrix& matrix() const { return W_; }

  /// Calls f(pixel_index, weight) for every nonzero weight of ray j.
  template <class F>
  void for_each_weight(Index ray, F&& f) const;

 private:
  struct RayParams {
    double cos_a;
    double sin_a;
    bool row_driven;
  };

  Grid2D grid_;
  ParallelGeometry geometry_;
  std::vector<RayParams> angle_params_;
  SparseMatrix W_;
};

template <class F>
void TomoOperator::for_each_weight(Index ray, F&& f) const {
  const Index a = ray / geometry_.n_det;
  const int k = static_cast<int>(ray % geometry_.n_det);
  const RayParams& p = angle_params_[static_cast<std::size_t>(a)];
  const double t = geometry_.detector_offset(k);
  const double h = grid_.pixel_size;
  // Ray point closest to the grid origin.
  const double px = t * p.cos_a;
  const double py = t * p.sin_a;

  if (p.row_driven) {
    // Step over pixel rows; interpolate between neighbouring columns.
    const double length = h / std::abs(p.cos_a);
    const double slope = -p.sin_a / p.cos_a;  // dx/dy along the ray
    for (int iy = 0; iy < grid_.ny; ++iy) {
      const double dy = grid_.center_y(iy) - grid_.origin_y - py;
      const double x = px + slope * dy;
      const double u = x / h + 0.5 * (grid_.nx - 1);
      const double base = std::floor(u);
      const double frac = u - base;
      const long i0 = static_cast<long>(base);
      const Index row = static_cast<Index>(iy) * grid_.nx;
      if (i0 >= 0 && i0 < grid_.nx) f(row + i0, (1.0 - frac) * length);
      if (i0 + 1 >= 0 && i0 + 1 < grid_.nx && frac > 0.0) f(row + i0 + 1, frac * length);
    }
  } else {
    const double length = h / std::abs(p.sin_a);
    const double slope = -p.cos_a / p.sin_a;  // dy/dx along the ray
    for (int ix = 0; ix < grid_.nx; ++ix) {
      const double dx = grid_.center_x(ix) - grid_.origin_x - px;
      const double y = py + slope * dx;
      const double v = y / h + 0.5 * (grid_.ny - 1);
      const double base = std::floor(v);
      const double frac = v - base;
      const long i0 = static_cast<long>(base);
      if (i0 >= 0 && i0 < grid_.ny) f(static_cast<Index>(i0) * grid_.nx + ix, (1.0 - frac) * length);
      if (i0 + 1 >= 0 && i0 + 1 < grid_.ny && frac > 0.0)
        f(static_cast<Index>(i0 + 1) * grid_.nx + ix, frac * length);
    }
  }
}

}  // namespace adjust
