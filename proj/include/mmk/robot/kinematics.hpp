#pragma once

#include <vector>

#include "mmk/robot/description.hpp"

namespace mmk {

enum class FrameId { ArmBase, Ee, Camera };

// SE(3) pose of the planar base (x, y, yaw); base frame sits at ground level.
RigidPose fkBase(const Eigen::Vector3d& base);

// World poses of [arm_base, link 1, .., link L]; link l is the frame after
// joint l rotates.
std::vector<RigidPose> fkChain(const RobotDescription& desc, const WholeBodyState& state);

RigidPose fkLink(const RobotDescription& desc, const WholeBodyState& state, int link);
RigidPose fkFrame(const RobotDescription& desc, const WholeBodyState& state, FrameId frame);

// Geometric Jacobian of a point frame rigidly attached to the last link,
// 6 x (3+L): rows [linear; angular], columns d/d(q_x, q_y, yaw, q_1..q_L).
Eigen::MatrixXd jacobianAt(const RobotDescription& desc, const WholeBodyState& state,
                           const RigidPose& attached);  // attached: last link -> frame
Eigen::MatrixXd jacobianEe(const RobotDescription& desc, const WholeBodyState& state);

struct SpherePlacement {
  Eigen::Vector3d center;
  double radius;
  int link;
};

std::vector<SpherePlacement> collisionSpherePositions(const RobotDescription& desc,
                                                      const WholeBodyState& state);

// Minimum clearance over all sphere pairs on non-adjacent links:
// ||c_i - c_j|| - r_i - r_j. Empty pair set returns +inf.
double selfClearance(const RobotDescription& desc, const WholeBodyState& state);

// Differential-drive wheel maps.
// omega_{l,r} = (2 v -/+ d_w omega_b) / (2 r_w), minus for the left wheel.
std::pair<double, double> wheelRates(double v, double omega_b, const BaseParams& base);

struct WheelState {
  double omega_l, omega_r;  // rad/s
  double alpha_l, alpha_r;  // rad/s^2
  double omega_b, alpha_b;  // body yaw rate/accel, for diagnostics
};

// Wheel rates from planar path derivatives via the quotient forms
//   omega_b = ddq^T B dq / (dq^T dq),  B = [[0,-1],[1,0]]
//   alpha_b = dddq^T B dq / (dq^T dq) - 2 (ddq^T B dq)(ddq^T dq) / (dq^T dq)^2
// Throws when ||dq|| < v_min (the quotients are ill-defined at zero speed).
WheelState wheelRatesFromPath(const Eigen::Vector2d& dq, const Eigen::Vector2d& ddq,
                              const Eigen::Vector2d& dddq, const BaseParams& base);

}  // namespace mmk
