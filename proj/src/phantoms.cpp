#include "adjust/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace adjust {

bool MaterialMap::is_feasible(double slack) const {
  if (A.rows() != grid.size()) return false;
  if ((A.array() < 0.0).any()) return false;
  return (A.rowwise().sum().array() <= 1.0 + slack).all();
}

Grid2D phantom_grid(int n) {
  require(n >= 1, "phantom_grid: n must be >= 1");
  return Grid2D(n, n, 2.0 / n);
}

namespace {

// Normalized coordinate of a pixel center on [-1, 1].
double norm_coord(int i, int n) { return (i + 0.5) / n * 2.0 - 1.0; }

struct Ellipse {
  int value_tenths;
  double a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan (Toft), grey values in tenths so sums are exact.
constexpr Ellipse kSheppLogan[] = {
    {10, 0.69, 0.92, 0.0, 0.0, 0.0},      {-8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-2, 0.11, 0.31, 0.22, 0.0, -18.0},   {-2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {1, 0.21, 0.25, 0.0, 0.35, 0.0},      {1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {1, 0.046, 0.046, 0.0, -0.1, 0.0},    {1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {1, 0.023, 0.023, 0.0, -0.606, 0.0},  {1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

bool inside(const Ellipse& e, double x, double y) {
  const double phi = e.phi_deg * std::numbers::pi / 180.0;
  const double dx = x - e.x0;
  const double dy = y - e.y0;
  const double xr = dx * std::cos(phi) + dy * std::sin(phi);
  const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
  return (xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0;
}

struct Disk {
  double cx, cy, r;
};

std::vector<Disk> ring(int count, double ring_radius, double r) {
  std::vector<Disk> out;
  for (int k = 0; k < count; ++k) {
    const double t = 2.0 * std::numbers::pi * k / count;
    out.push_back({ring_radius * std::cos(t), ring_radius * std::sin(t), r});
  }
  return out;
}

void require_disjoint(const std::vector<Disk>& disks) {
  for (std::size_t i = 0; i < disks.size(); ++i) {
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      const double d = std::hypot(disks[i].cx - disks[j].cx, disks[i].cy - disks[j].cy);
      require(d > disks[i].r + disks[j].r, "disk phantom: disks " + std::to_string(i) + " and " +
                                               std::to_string(j) + " overlap");
    }
  }
}

bool in_disk(const Disk& d, double x, double y) {
  const double dx = x - d.cx;
  const double dy = y - d.cy;
  return dx * dx + dy * dy <= d.r * d.r;
}

}  // namespace

MaterialMap shepp_logan(int n, int materials) {
  require(n >= 16, "shepp_logan: n must be >= 16");
  require(materials >= 2 && materials <= 5, "shepp_logan: materials must be in [2, 5]");

  std::vector<int> grey(static_cast<std::size_t>(n) * n, 0);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double x = norm_coord(ix, n);
      const double y = norm_coord(iy, n);
      int v = 0;
      for (const auto& e : kSheppLogan)
        if (inside(e, x, y)) v += e.value_tenths;
      grey[static_cast<std::size_t>(iy) * n + ix] = v;
    }
  }

  // Levels present in the full-resolution phantom; fixed so that every
  // resolution uses the same class assignment.
  const std::vector<int> levels = {10, 4, 3, 2, 1};
  const int k = static_cast<int>(levels.size());

  MaterialMap map{phantom_grid(n), Matrix::Zero(static_cast<Index>(n) * n, materials), {}};
  for (int m = 0; m < materials; ++m) map.labels.push_back("shepp_logan_" + std::to_string(m));
  for (std::size_t i = 0; i < grey.size(); ++i) {
    const auto it = std::find(levels.begin(), levels.end(), grey[i]);
    if (it == levels.end()) continue;  // background, ventricles
    const int rank = static_cast<int>(it - levels.begin());
    const int cls = rank * materials / k;
    map.A(static_cast<Index>(i), cls) = 1.0;
  }
  return map;
}

MaterialMap disks(int n, int n_disks) {
  require(n >= 1, "disks: n must be >= 1");
  require(n_disks >= 1 && n_disks <= 15, "disks: n_disks must be in [1, 15]");
  const auto layout = ring(n_disks, DiskLayout::ring_radius, DiskLayout::disk_radius);
  require_disjoint(layout);

  MaterialMap map{phantom_grid(n), Matrix::Zero(static_cast<Index>(n) * n, n_disks), {}};
  for (int m = 0; m < n_disks; ++m) map.labels.push_back("disk_" + std::to_string(m));
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double x = norm_coord(ix, n);
      const double y = norm_coord(iy, n);
      for (int m = 0; m < n_disks; ++m) {
        if (in_disk(layout[static_cast<std::size_t>(m)], x, y)) {
          map.A(static_cast<Index>(iy) * n + ix, m) = 1.0;
          break;
        }
      }
    }
  }
  return map;
}

MaterialMap mixed_disks(int n, int materials) {
  require(n >= 1, "mixed_disks: n must be >= 1");
  require(materials >= 2 && materials <= 6, "mixed_disks: materials must be in [2, 6]");
  const int pairs = materials * (materials - 1) / 2;
  auto pure = ring(materials, DiskLayout::inner_ring_radius, DiskLayout::disk_radius);
  auto mixed = ring(pairs, DiskLayout::ring_radius, DiskLayout::disk_radius);
  std::vector<Disk> all = pure;
  all.insert(all.end(), mixed.begin(), mixed.end());
  require_disjoint(all);

  std::vector<std::pair<int, int>> pair_list;
  for (int a = 0; a < materials; ++a)
    for (int b = a + 1; b < materials; ++b) pair_list.emplace_back(a, b);

  MaterialMap map{phantom_grid(n), Matrix::Zero(static_cast<Index>(n) * n, materials), {}};
  for (int m = 0; m < materials; ++m) map.labels.push_back("mixed_" + std::to_string(m));
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double x = norm_coord(ix, n);
      const double y = norm_coord(iy, n);
      const Index row = static_cast<Index>(iy) * n + ix;
      for (int m = 0; m < materials; ++m) {
        if (in_disk(pure[static_cast<std::size_t>(m)], x, y)) map.A(row, m) = 1.0;
      }
      for (int p = 0; p < pairs; ++p) {
        if (in_disk(mixed[static_cast<std::size_t>(p)], x, y)) {
          map.A(row, pair_list[static_cast<std::size_t>(p)].first) = 0.5;
          map.A(row, pair_list[static_cast<std::size_t>(p)].second) = 0.5;
        }
      }
    }
  }
  return map;
}

MaterialMap upsample(const MaterialMap& map, int factor) {
  require(factor >= 1, "upsample: factor must be >= 1");
  const Grid2D& g = map.grid;
  MaterialMap out{g.refined(factor), Matrix(g.size() * factor * factor, map.A.cols()), map.labels};
  const int nx = g.nx * factor;
  for (int iy = 0; iy < out.grid.ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Index src = static_cast<Index>(iy / factor) * g.nx + ix / factor;
      out.A.row(static_cast<Index>(iy) * nx + ix) = map.A.row(src);
    }
  }
  return out;
}

MaterialMap downsample(const MaterialMap& map, int factor) {
  require(factor >= 1, "downsample: factor must be >= 1");
  const Grid2D& g = map.grid;
  require(g.nx % factor == 0 && g.ny % factor == 0,
          "downsample: grid size not divisible by factor");
  const int nx = g.nx / factor;
  const int ny = g.ny / factor;
  MaterialMap out{Grid2D(nx, ny, g.pixel_size * factor, g.origin_x, g.origin_y),
                  Matrix::Zero(static_cast<Index>(nx) * ny, map.A.cols()), map.labels};
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      out.A.row(static_cast<Index>(iy / factor) * nx + ix / factor) +=
          map.A.row(static_cast<Index>(iy) * g.nx + ix);
  out.A /= static_cast<double>(factor * factor);
  return out;
}

}  // namespace adjust
