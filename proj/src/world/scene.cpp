#include "mmk/world/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mmk {

Eigen::Vector2d predictObstacle(const DynamicObstacle& obs, double t) {
  return obs.position + obs.velocity * t;
}

OccupancyGrid SceneDescription::rasterize() const {
  OccupancyGrid occ;
  occ.resolution = resolution;
  occ.origin = bounds_min;
  Eigen::Vector3d span = bounds_max - bounds_min;
  for (int i = 0; i < 3; ++i) {
    if (span[i] <= 0.0) throw std::invalid_argument("SceneDescription: empty bounds");
    occ.dims[i] = std::max(2, static_cast<int>(std::ceil(span[i] / resolution)) + 1);
  }
  occ.occupied.assign(static_cast<size_t>(occ.dims.x()) * occ.dims.y() * occ.dims.z(), 0);

  for (const auto& b : boxes) {
    const Eigen::Vector3d lo = b.center - 0.5 * b.size, hi = b.center + 0.5 * b.size;
    Eigen::Vector3i vlo, vhi;
    for (int i = 0; i < 3; ++i) {
      vlo[i] = std::max(0, static_cast<int>(std::ceil((lo[i] - occ.origin[i]) / resolution - 0.5)));
      vhi[i] = std::min(occ.dims[i] - 1,
                        static_cast<int>(std::floor((hi[i] - occ.origin[i]) / resolution + 0.5)));
    }
    for (int z = vlo.z(); z <= vhi.z(); ++z)
      for (int y = vlo.y(); y <= vhi.y(); ++y)
        for (int x = vlo.x(); x <= vhi.x(); ++x) occ.set(x, y, z, true);
  }

  for (const auto& c : cylinders) {
    const int zlo = std::max(0, static_cast<int>(std::ceil((c.z0 - occ.origin.z()) / resolution - 0.5)));
    const int zhi = std::min(occ.dims.z() - 1,
                             static_cast<int>(std::floor((c.z0 + c.height - occ.origin.z()) / resolution + 0.5)));
    const int xlo = std::max(0, static_cast<int>(std::floor((c.center.x() - c.radius - occ.origin.x()) / resolution)));
    const int xhi = std::min(occ.dims.x() - 1,
                             static_cast<int>(std::ceil((c.center.x() + c.radius - occ.origin.x()) / resolution)));
    const int ylo = std::max(0, static_cast<int>(std::floor((c.center.y() - c.radius - occ.origin.y()) / resolution)));
    const int yhi = std::min(occ.dims.y() - 1,
                             static_cast<int>(std::ceil((c.center.y() + c.radius - occ.origin.y()) / resolution)));
    for (int z = zlo; z <= zhi; ++z)
      for (int y = ylo; y <= yhi; ++y)
        for (int x = xlo; x <= xhi; ++x) {
          const Eigen::Vector3d p = occ.center(x, y, z);
          if ((p.head<2>() - c.center).norm() <= c.radius) occ.set(x, y, z, true);
        }
  }

  if (!pointcloud_path.empty()) {
    std::ifstream is(pointcloud_path);
    if (!is) throw std::runtime_error("cannot read point cloud " + pointcloud_path);
    double x, y, z;
    while (is >> x >> y >> z) {
      const Eigen::Vector3i v = occ.voxelOf({x, y, z});
      if (occ.inBounds(v.x(), v.y(), v.z())) occ.set(v.x(), v.y(), v.z(), true);
    }
  }
  return occ;
}

}  // namespace mmk
