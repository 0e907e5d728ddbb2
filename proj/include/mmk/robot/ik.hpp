#pragma once

#include <optional>
#include <vector>

#include "mmk/robot/kinematics.hpp"

namespace mmk {

struct IkOptions {
  int max_iterations = 80;
  int restarts = 8;          // multi-seed restarts including the caller's seed
  double pos_tol = 1e-4;     // m
  double rot_tol = 1e-3;     // rad
  double damping = 0.05;     // DLS lambda
  bool position_only = false;
  uint64_t rng_seed = 12345;
};

// Damped least-squares IK for the arm with the base fixed. Returns the
// deduplicated set of converged, in-limit solutions; empty when no restart
// converges (unreachable target).
std::vector<Eigen::VectorXd> solveIk(const RobotDescription& desc, const RigidPose& target,
                                     const Eigen::Vector3d& base, const Eigen::VectorXd& seed,
                                     const IkOptions& opts = {});

}  // namespace mmk
