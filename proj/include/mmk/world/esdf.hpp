#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmk/geometry/pose.hpp"

namespace mmk {

struct OccupancyGrid {
  Eigen::Vector3d origin{0.0, 0.0, 0.0};  // center of voxel (0,0,0)
  double resolution = 0.05;
  Eigen::Vector3i dims{1, 1, 1};
  std::vector<uint8_t> occupied;

  size_t index(int x, int y, int z) const {
    return (static_cast<size_t>(z) * dims.y() + y) * dims.x() + x;
  }
  bool inBounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims.x() && y < dims.y() && z < dims.z();
  }
  void set(int x, int y, int z, bool occ) { occupied[index(x, y, z)] = occ ? 1 : 0; }
  bool at(int x, int y, int z) const { return occupied[index(x, y, z)] != 0; }
  Eigen::Vector3d center(int x, int y, int z) const {
    return origin + resolution * Eigen::Vector3d(x, y, z);
  }
  Eigen::Vector3i voxelOf(const Eigen::Vector3d& p) const;
};

struct EsdfQuery {
  double value = 0.0;           // m, positive outside obstacles
  Eigen::Vector3d gradient{0.0, 0.0, 0.0};
  bool clamped = false;         // query point fell outside the grid bounds
};

// Voxelized signed distance field. Distances are exact Euclidean distances to
// the nearest occupied (resp. free) voxel center, positive outside and
// negative inside, both capped at `cap`.
class EsdfGrid {
 public:
  EsdfGrid() = default;

  static EsdfGrid build(const OccupancyGrid& occ, double cap = 5.0);

  EsdfQuery query(const Eigen::Vector3d& p) const;
  double valueAt(const Eigen::Vector3d& p) const { return query(p).value; }

  // stored (uninterpolated) value at a voxel
  double voxelValue(int x, int y, int z) const { return values_[occ_index(x, y, z)]; }

  const Eigen::Vector3d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  double cap() const { return cap_; }

 private:
  size_t occ_index(int x, int y, int z) const {
    return (static_cast<size_t>(z) * dims_.y() + y) * dims_.x() + x;
  }

  Eigen::Vector3d origin_{0.0, 0.0, 0.0};
  double resolution_ = 0.05;
  Eigen::Vector3i dims_{1, 1, 1};
  double cap_ = 5.0;
  std::vector<float> values_;
};

}  // namespace mmk
