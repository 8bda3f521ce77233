#pragma once

#include "adjust/common.hpp"
#include "adjust/tomo.hpp"

#include <string>
#include <vector>

namespace adjust {

/// N x M material fractions on a grid; column m is the map of material m.
struct MaterialMap {
  Grid2D grid;
  Matrix A;
  std::vector<std::string> labels;

  Index materials() const { return A.cols(); }
  /// Checks A >= 0 and row sums <= 1 + slack.
  bool is_feasible(double slack = 1e-12) const;
};

/// Phantoms are defined on the square [-1, 1]^2: an n x n render uses
/// pixel_size 2/n, so a 2n render is the same object at half the pixel size.
Grid2D phantom_grid(int n);

/// Modified Shepp-Logan head. Its five nonzero grey levels are sorted
/// descending and grouped into M classes by rank; background and the zero-valued
/// ventricles are empty.
MaterialMap shepp_logan(int n, int materials);

/// Disk geometry in normalized units (phantom spans [-1, 1]).
struct DiskLayout {
  static constexpr double ring_radius = 0.6;
  static constexpr double disk_radius = 0.12;
  static constexpr double inner_ring_radius = 0.3;
};

/// n_disks equal disks evenly spaced on a ring, one material each.
MaterialMap disks(int n, int n_disks);

/// M pure disks on an inner ring and M(M-1)/2 50/50 mixtures on the outer ring,
/// ordered by material pair (a, b) with a < b.
MaterialMap mixed_disks(int n, int materials);

/// Nearest-neighbour replication of every pixel into a factor x factor block.
MaterialMap upsample(const MaterialMap& map, int factor);

/// Block average; inverse of upsample on replicated maps.
MaterialMap downsample(const MaterialMap& map, int factor);

}  // namespace adjust
