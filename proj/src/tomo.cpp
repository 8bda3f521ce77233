#include "adjust/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace adjust {

Grid2D::Grid2D(int nx_, int ny_, double pixel_size_, double ox, double oy)
    : nx(nx_), ny(ny_), pixel_size(pixel_size_), origin_x(ox), origin_y(oy) {
  require(nx >= 1 && ny >= 1, "Grid2D: pixel counts must be >= 1");
  require(std::isfinite(pixel_size) && pixel_size > 0.0, "Grid2D: pixel_size must be > 0");
  require(std::isfinite(origin_x) && std::isfinite(origin_y), "Grid2D: origin must be finite");
}

Grid2D Grid2D::refined(int factor) const {
  require(factor >= 1, "Grid2D::refined: factor must be >= 1");
  return Grid2D(nx * factor, ny * factor, pixel_size / factor, origin_x, origin_y);
}

ParallelGeometry::ParallelGeometry(std::vector<double> angles_, int n_det_, double det_spacing_)
    : angles(std::move(angles_)), n_det(n_det_), det_spacing(det_spacing_) {
  require(!angles.empty(), "ParallelGeometry: angle list is empty");
  for (double a : angles) require(std::isfinite(a), "ParallelGeometry: non-finite angle");
  require(n_det >= 1, "ParallelGeometry: n_det must be >= 1");
  require(std::isfinite(det_spacing) && det_spacing > 0.0,
          "ParallelGeometry: det_spacing must be > 0");
}

std::vector<double> ParallelGeometry::equidistant(int count, double start, double stop) {
  require(count >= 1, "ParallelGeometry::equidistant: count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = (stop - start) / count;
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + i * step;
  return out;
}

TomoOperator::TomoOperator(Grid2D grid, ParallelGeometry geometry)
    : grid_(std::move(grid)), geometry_(std::move(geometry)) {
  require(grid_.nx >= 1 && grid_.ny >= 1 && grid_.pixel_size > 0.0, "TomoOperator: invalid grid");
  require(!geometry_.angles.empty() && geometry_.n_det >= 1, "TomoOperator: invalid geometry");
  angle_params_.reserve(geometry_.angles.size());
  for (double a : geometry_.angles) {
    const double c = std::cos(a);
    const double s = std::sin(a);
    angle_params_.push_back({c, s, std::abs(c) >= std::abs(s)});
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(range_size()) * 2 *
                  static_cast<std::size_t>(std::max(grid_.nx, grid_.ny)));
  for (Index j = 0; j < range_size(); ++j)
    for_each_weight(j, [&](Index i, double w) { entries.emplace_back(j, i, w); });
  W_.resize(range_size(), domain_size());
  W_.setFromTriplets(entries.begin(), entries.end());
}

namespace {

void check_input(Index rows, Index expected, bool finite, const char* what) {
  require(rows == expected, std::string("TomoOperator::") + what + ": expected " +
                                std::to_string(expected) + " rows, got " + std::to_string(rows));
  require(finite, std::string("TomoOperator::") + what + ": non-finite input");
}

}  // namespace

Vector TomoOperator::forward_vector(const Eigen::Ref<const Vector>& image) const {
  check_input(image.size(), domain_size(), image.allFinite(), "forward");
  return W_ * image;
}

Vector TomoOperator::adjoint_vector(const Eigen::Ref<const Vector>& sino) const {
  check_input(sino.size(), range_size(), sino.allFinite(), "adjoint");
  return W_.transpose() * sino;
}

Matrix TomoOperator::forward_matrix(const Eigen::Ref<const Matrix>& images) const {
  check_input(images.rows(), domain_size(), images.allFinite(), "forward");
  return W_ * images;
}

Matrix TomoOperator::adjoint_matrix(const Eigen::Ref<const Matrix>& sinos) const {
  check_input(sinos.rows(), range_size(), sinos.allFinite(), "adjoint");
  return W_.transpose() * sinos;
}

}  // namespace adjust
