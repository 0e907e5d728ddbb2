#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mmk/world/esdf.hpp"

namespace mmk {

// Axis-aligned box, by center and full size.
struct BoxPrim {
  Eigen::Vector3d center;
  Eigen::Vector3d size;
};

// Vertical cylinder standing on z = z0.
struct CylinderPrim {
  Eigen::Vector2d center{0.0, 0.0};
  double z0 = 0.0;
  double height = 1.0;
  double radius = 0.1;
};

struct DynamicObstacle {
  Eigen::Vector2d position{0.0, 0.0};  // at t = 0
  Eigen::Vector2d velocity{0.0, 0.0};
  double radius = 0.3;
};

// Constant-velocity prediction p(0) + v t.
Eigen::Vector2d predictObstacle(const DynamicObstacle& obs, double t);

// Hand-authored static world: primitives and/or a point-cloud file, voxelized
// into one occupancy grid over the given bounds.
struct SceneDescription {
  Eigen::Vector3d bounds_min{-1.0, -1.0, 0.0};
  Eigen::Vector3d bounds_max{1.0, 1.0, 1.0};
  double resolution = 0.05;
  double esdf_cap = 5.0;
  std::vector<BoxPrim> boxes;
  std::vector<CylinderPrim> cylinders;
  std::string pointcloud_path;  // optional, whitespace-separated x y z rows

  OccupancyGrid rasterize() const;
  EsdfGrid buildEsdf() const { return EsdfGrid::build(rasterize(), esdf_cap); }
};

}  // namespace mmk
