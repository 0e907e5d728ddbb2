#include "mmk/reach/cmz.hpp"

#include <set>
#include <stdexcept>

namespace mmk {

CmzSampleSet sampleCmz(const RigidPose& nominal, const CmzParams& params, const EsdfGrid* world) {
  if (!(params.dphi > 0.0 && params.dtheta > 0.0 && params.dpsi > 0.0))
    throw std::invalid_argument("sampleCmz: resolutions must be positive");
  CmzSampleSet out;
  out.r_cmz = params.r_cmz;
  out.delta_tilt = params.delta_tilt;

  const int n_phi = static_cast<int>(std::floor(2.0 * M_PI / params.dphi));
  const int n_theta = static_cast<int>(std::floor(M_PI / params.dtheta));
  out.raw_position_count = (n_phi + 1) * (n_theta + 1);

  std::vector<Eigen::Vector3d> positions;
  for (int j = 0; j <= n_phi; ++j) {
    const double phi = j * params.dphi;
    for (int k = 0; k <= n_theta; ++k) {
      const double theta = k * params.dtheta;
      const Eigen::Vector3d p =
          nominal.translation + params.r_cmz * Eigen::Vector3d(std::cos(theta) * std::sin(phi),
                                                               std::sin(theta) * std::sin(phi),
                                                               std::cos(phi));
      bool dup = false;
      for (const auto& q : positions)
        if ((q - p).norm() < 1e-12) {
          dup = true;
          break;
        }
      if (!dup) positions.push_back(p);
    }
  }

  std::vector<Eigen::Quaterniond> rotations;
  if (params.delta_tilt == 0.0) {
    rotations.push_back(nominal.rotation);
  } else {
    const Eigen::Quaterniond tilted =
        nominal.rotation * Eigen::Quaterniond(Eigen::AngleAxisd(params.delta_tilt, Eigen::Vector3d::UnitX()));
    const Eigen::Vector3d z_t = nominal.zAxis();
    const int m_max = static_cast<int>(std::floor(2.0 * M_PI / params.dpsi));
    for (int m = 0; m <= m_max; ++m) {
      const Eigen::Quaterniond R =
          Eigen::Quaterniond(Eigen::AngleAxisd(m * params.dpsi, z_t)) * tilted;
      bool dup = false;
      for (const auto& q : rotations)
        if (std::abs(std::abs(q.dot(R)) - 1.0) < 1e-12) {
          dup = true;
          break;
        }
      if (!dup) rotations.push_back(R);
    }
  }

  for (const auto& p : positions) {
    if (world && world->valueAt(p) < params.sphere_radius) continue;
    for (const auto& R : rotations) out.poses.emplace_back(R, p);
  }
  return out;
}

CmzRegion cmzRegion(const CmzSampleSet& samples, const InverseReachabilityMap& irm) {
  CmzRegion out;
  out.used_r_cmz = samples.r_cmz;
  if (samples.poses.empty()) {
    out.status = CmzStatus::ReduceMargin;
    return out;
  }
  std::set<int64_t> inter;
  bool first = true;
  for (const auto& pose : samples.poses) {
    const auto cells = irm.baseCells(pose);
    if (first) {
      inter.insert(cells.begin(), cells.end());
      first = false;
    } else {
      std::set<int64_t> next;
      for (int64_t c : cells)
        if (inter.count(c)) next.insert(c);
      inter = std::move(next);
    }
    if (inter.empty()) break;
  }
  if (inter.empty()) {
    out.status = CmzStatus::ReduceMargin;
    return out;
  }
  for (int64_t key : inter) out.cells.push_back(irm.cellCenter(key));
  out.ellipse = fitCoverageEllipse(out.cells);
  out.status = CmzStatus::Ok;
  return out;
}

CmzRegion computeCmzEllipse(const RigidPose& nominal, CmzParams params,
                            const InverseReachabilityMap& irm, const EsdfGrid* world) {
  while (true) {
    const CmzSampleSet samples = sampleCmz(nominal, params, world);
    CmzRegion region = cmzRegion(samples, irm);
    if (region.status == CmzStatus::Ok) return region;
    if (params.r_cmz <= params.r_floor) {
      region.status = CmzStatus::Infeasible;
      region.used_r_cmz = params.r_cmz;
      return region;
    }
    params.r_cmz = std::max(params.r_floor, 0.5 * params.r_cmz);
  }
}

Ellipse2 keypointEllipse(const RigidPose& keypoint_pose, const std::vector<RigidPose>& grasps,
                         const InverseReachabilityMap& irm) {
  if (grasps.empty()) throw std::invalid_argument("keypointEllipse: empty grasp set");
  std::set<int64_t> cells;
  for (const auto& g : grasps) {
    const auto set = irm.baseCells(keypoint_pose * g);
    cells.insert(set.begin(), set.end());
  }
  if (cells.empty())
    throw std::runtime_error("keypointEllipse: keypoint unreachable for every grasp");
  std::vector<Eigen::Vector2d> centers;
  centers.reserve(cells.size());
  for (int64_t key : cells) centers.push_back(irm.cellCenter(key));
  return fitCoverageEllipse(centers);
}

}  // namespace mmk
