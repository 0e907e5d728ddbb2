#pragma once

#include "mmk/reach/irm.hpp"
#include "mmk/world/esdf.hpp"

namespace mmk {

struct CmzParams {
  double r_cmz = 0.05;        // translational compensation margin (m)
  double delta_tilt = 0.1;    // fixed tilt offset (rad)
  double dphi = M_PI / 4;     // position sampling resolutions
  double dtheta = M_PI / 4;
  double dpsi = M_PI / 4;     // roll sweep about the approach axis
  double sphere_radius = 0.04;  // collision screen radius for sampled poses
  double r_floor = 0.01;      // margin-reduction floor (m)
};

struct CmzSampleSet {
  std::vector<RigidPose> poses;  // collision-free samples
  double r_cmz = 0.0;
  double delta_tilt = 0.0;
  int raw_position_count = 0;    // before dedup/collision filtering
};

// Task-pose neighborhood per the sphere/tilt sampling scheme; samples whose
// screening sphere intersects the environment are discarded. delta_tilt = 0
// degenerates the orientation set to the nominal rotation.
CmzSampleSet sampleCmz(const RigidPose& nominal, const CmzParams& params,
                       const EsdfGrid* world = nullptr);

enum class CmzStatus { Ok, ReduceMargin, Infeasible };

struct CmzRegion {
  CmzStatus status = CmzStatus::Infeasible;
  Ellipse2 ellipse;                    // valid when status == Ok
  double used_r_cmz = 0.0;
  std::vector<Eigen::Vector2d> cells;  // intersection cell centers
};

// Intersection of base-position sets over all samples, fitted to an ellipse.
// Empty intersection reports ReduceMargin so the caller can shrink r_cmz.
CmzRegion cmzRegion(const CmzSampleSet& samples, const InverseReachabilityMap& irm);

// Full margin-reduction loop: halve r_cmz until the intersection is nonempty,
// hard infeasibility below the floor.
CmzRegion computeCmzEllipse(const RigidPose& nominal, CmzParams params,
                            const InverseReachabilityMap& irm, const EsdfGrid* world = nullptr);

// Union of reachable sets over the grasp candidates of one keypoint, fitted
// to the front-end filter ellipse. Throws when every grasp is unreachable.
Ellipse2 keypointEllipse(const RigidPose& keypoint_pose, const std::vector<RigidPose>& grasps,
                         const InverseReachabilityMap& irm);

}  // namespace mmk
