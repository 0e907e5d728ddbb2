#pragma once

#include "mmk/robot/kinematics.hpp"

namespace mmk {

// Kinematic snapshot for analytic constraint gradients: world joint axes and
// origins, with the base yaw treated as rotational coordinate 0 (axis z at
// the base origin). Generalized coordinates are (x, y, yaw, q_1..q_L).
struct KinChain {
  RigidPose base;
  std::vector<RigidPose> links;          // arm_base, link 1..L
  std::vector<Eigen::Vector3d> axes;     // rot coords: base yaw, joints (L+1)
  std::vector<Eigen::Vector3d> origins;  // matching rotation centers
  const RobotDescription* robot = nullptr;

  static KinChain at(const RobotDescription& robot, const WholeBodyState& state);

  RigidPose ee() const { return links.back() * robot->ee_frame; }
  RigidPose camera() const { return links.back() * robot->camera_frame; }

  // 3 x (3+L) position jacobian of a world point rigidly attached to `link`
  // (0 = base, 1..L arm links)
  Eigen::MatrixXd pointJacobian(int link, const Eigen::Vector3d& world_point) const;

  // derivative of a world direction rigidly attached to `link` wrt each
  // generalized coordinate, 3 x (3+L)
  Eigen::MatrixXd directionJacobian(int link, const Eigen::Vector3d& world_dir) const;

  // derivative of (pointJacobian * v_gen) wrt each generalized coordinate,
  // i.e. the directional second derivative of the point position; needed by
  // instantaneous end-effector velocity terms
  Eigen::MatrixXd velocityJacobian(int link, const Eigen::Vector3d& world_point,
                                   const Eigen::VectorXd& v_gen) const;

  // derivative of the attached-frame angular velocity (sum v_j a_j) wrt coords
  Eigen::MatrixXd angularVelocityJacobian(int link, const Eigen::VectorXd& v_gen) const;

  int rotCoordCount(int link) const { return link == 0 ? 1 : link + 1; }
};

}  // namespace mmk
