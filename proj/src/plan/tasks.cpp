#include "mmk/plan/tasks.hpp"

#include <cmath>
#include <stdexcept>

namespace mmk {

RigidPose tiltedGrasp(double yaw, double tilt) {
  return RigidPose(Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                                      Eigen::AngleAxisd(M_PI - tilt, Eigen::Vector3d::UnitY())),
                   Eigen::Vector3d::Zero());
}

RigidPose TaskSpec::objectMotionAt(double tau) const {
  if (object_motion.empty()) return RigidPose::Identity();
  if (tau <= object_motion.front().first) return object_motion.front().second;
  if (tau >= object_motion.back().first) return object_motion.back().second;
  for (size_t i = 0; i + 1 < object_motion.size(); ++i) {
    const auto& [t0, p0] = object_motion[i];
    const auto& [t1, p1] = object_motion[i + 1];
    if (tau <= t1) {
      const double a = (t1 > t0) ? (tau - t0) / (t1 - t0) : 1.0;
      return interpolatePose(p0, p1, a);
    }
  }
  return object_motion.back().second;
}

RigidPose TaskSpec::taskPoseAt(double tau, const RigidPose& object) const {
  return object * objectMotionAt(tau);
}

void TaskSpec::taskRateAt(double tau, const RigidPose& object, Eigen::Vector3d& v,
                          Eigen::Vector3d& w) const {
  v.setZero();
  w.setZero();
  if (object_motion.size() < 2) return;
  for (size_t i = 0; i + 1 < object_motion.size(); ++i) {
    const auto& [t0, p0] = object_motion[i];
    const auto& [t1, p1] = object_motion[i + 1];
    if ((tau >= t0 && tau < t1) || (i + 2 == object_motion.size() && tau >= t1)) {
      const double dt = t1 - t0;
      if (dt <= 0.0) return;
      // piecewise-constant rates of the object-frame segment, mapped to world
      v = object.rotation * ((p1.translation - p0.translation) / dt);
      Eigen::Quaterniond dq = p0.rotation.conjugate() * p1.rotation;
      if (dq.w() < 0.0) dq.coeffs() = -dq.coeffs();
      const Eigen::AngleAxisd aa(dq);
      const Eigen::Vector3d w_local = aa.angle() / dt * aa.axis();
      w = (object.rotation * p0.rotation) * w_local;
      return;
    }
  }
}

std::vector<Keypoint> discretizeTasks(const std::vector<TaskSpec>& tasks,
                                      const std::vector<RigidPose>& object_poses,
                                      double dt_sample) {
  if (tasks.size() != object_poses.size())
    throw std::invalid_argument("discretizeTasks: pose list mismatch");
  std::vector<Keypoint> keypoints;
  for (size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    if (task.duration <= 0.0) {
      keypoints.push_back({task.taskPoseAt(0.0, object_poses[i]), static_cast<int>(i), 0.0});
      continue;
    }
    const int n = static_cast<int>(std::ceil(task.duration / dt_sample));
    for (int k = 0; k <= n; ++k) {
      const double tau = std::min(task.duration, k * dt_sample);
      keypoints.push_back({task.taskPoseAt(tau, object_poses[i]), static_cast<int>(i), tau});
    }
  }
  return keypoints;
}

}  // namespace mmk
