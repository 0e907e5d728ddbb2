#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "mmk/geometry/ellipse.hpp"
#include "mmk/robot/kinematics.hpp"

namespace mmk {

struct IrmParams {
  double base_grid = 0.05;     // planar base-position cell (m)
  int yaw_bins = 16;           // marginalized base yaw samples
  double ee_voxel = 0.05;      // relative end-effector position voxel (m)
  int sweep_budget = 400000;   // joint-grid configurations in the FK sweep
  double min_self_clearance = 0.0;

  bool operator==(const IrmParams&) const = default;
};

// Inverse reachability: a dense FK sweep over a joint grid bins end-effector
// poses (position voxel + nearest of 26 approach directions) relative to the
// base; inverting a bin yields the planar base offsets that reach it. Queries
// marginalize base yaw.
class InverseReachabilityMap {
 public:
  static InverseReachabilityMap build(const RobotDescription& desc, const IrmParams& params = {},
                                      int threads = 2);

  // planar base positions (cell centers, base_grid spacing) from which the
  // world pose P is reachable for at least one yaw bin
  std::vector<Eigen::Vector2d> basePositions(const RigidPose& P) const;

  // same set as packed cell keys, cheap to intersect
  std::vector<int64_t> baseCells(const RigidPose& P) const;

  Eigen::Vector2d cellCenter(int64_t key) const;
  int64_t cellOf(const Eigen::Vector2d& p) const;

  const IrmParams& params() const { return params_; }
  uint64_t descriptionHash() const { return desc_hash_; }
  size_t binCount() const { return bins_.size(); }

  void saveCache(const std::string& path) const;
  static std::optional<InverseReachabilityMap> loadCache(const std::string& path,
                                                         const RobotDescription& desc,
                                                         const IrmParams& params);

 private:
  IrmParams params_;
  uint64_t desc_hash_ = 0;
  // (approach dir, rel z index) -> deduplicated relative (ix, iy) offsets
  std::unordered_map<uint32_t, std::vector<std::pair<int16_t, int16_t>>> bins_;

  static uint32_t binKey(int dir, int iz) { return static_cast<uint32_t>(dir) << 16 | static_cast<uint16_t>(iz + 4096); }
};

// Mean/covariance (PCA) ellipse over planar cells, principal axes scaled so at
// least `coverage` of the cells fall inside.
Ellipse2 fitCoverageEllipse(const std::vector<Eigen::Vector2d>& cells, double coverage = 0.95,
                            double min_semi_axis = 0.025);

}  // namespace mmk
