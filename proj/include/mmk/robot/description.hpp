#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmk/geometry/pose.hpp"

namespace mmk {

struct JointSpec {
  RigidPose origin;                          // parent frame -> joint frame at q = 0
  Eigen::Vector3d axis{0.0, 0.0, 1.0};       // rotation axis in joint frame
  double q_min = -3.1;
  double q_max = 3.1;
  double omega_max = 3.0;   // rad/s
  double alpha_max = 10.0;  // rad/s^2
};

struct BaseParams {
  double wheel_radius = 0.06;       // m
  double wheel_separation = 0.2624; // m
  double wheel_omega_max = 10.0;    // rad/s
  double wheel_alpha_max = 40.0;    // rad/s^2
  double v_min = 0.02;              // m/s, wheel-map singularity guard
};

struct CollisionSphere {
  int link = 0;  // 0 = mobile base, 1..L = arm links
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  double radius = 0.05;
};

// Kinematic description of a differential-drive base with an L-joint serial
// arm; immutable after load, shared by all kinematics queries.
struct RobotDescription {
  std::string name = "robot";
  BaseParams base;
  RigidPose mount;         // base frame -> arm base
  RigidPose ee_frame;      // last link -> end-effector
  RigidPose camera_frame;  // last link -> camera (eye-in-hand)
  std::vector<JointSpec> joints;
  std::vector<CollisionSphere> spheres;

  int jointCount() const { return static_cast<int>(joints.size()); }

  // conservative arm span from the arm base, used by reach screens
  double maxReach() const;

  Eigen::VectorXd lowerLimits() const;
  Eigen::VectorXd upperLimits() const;
  bool withinLimits(const Eigen::VectorXd& q, double tol = 1e-9) const;

  std::string serialize() const;
  static RobotDescription parse(const std::string& text);
  static RobotDescription load(const std::string& path);
  void save(const std::string& path) const;

  // stable content hash, used to key cached reachability maps
  uint64_t contentHash() const;
};

// Whole-body state: planar base pose (x, y, yaw) plus L arm joint angles.
struct WholeBodyState {
  Eigen::Vector3d base{0.0, 0.0, 0.0};
  Eigen::VectorXd arm;

  WholeBodyState() = default;
  WholeBodyState(const Eigen::Vector3d& b, const Eigen::VectorXd& a) : base(b), arm(a) {}
};

}  // namespace mmk
