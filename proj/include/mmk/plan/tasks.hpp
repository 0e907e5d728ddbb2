#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmk/geometry/pose.hpp"

namespace mmk {

struct GripperEvent {
  double tau = 0.0;  // task-local time
  bool close = false;
};

// Object-centric task: coarse object pose, grasp candidates in the object
// frame, an object-frame pose trajectory over [0, duration], and the binary
// gripper command trajectory. duration == 0 models instant pick/place.
struct TaskSpec {
  std::string name;
  RigidPose object_pose;                                     // coarse initial estimate
  std::vector<RigidPose> grasps;                             // object frame
  std::vector<std::pair<double, RigidPose>> object_motion;   // (tau, object-frame pose)
  double duration = 0.0;
  std::vector<GripperEvent> gripper;

  bool needs_perception = false;  // pose must be estimated before execution
  bool needs_cmz = false;         // compensation margin at the task instant
  bool is_grasp = false;          // pre-grasp approach safety window
  bool is_place = false;          // post-place retreat safety window
  bool holds_object_after = false;
  bool continues_grasp = false;   // grasp carried over from the previous task

  std::vector<std::pair<Eigen::Vector3d, double>> object_spheres;  // object frame
  double target_radius = 0.03;    // observed-region bounding radius

  // mission success geometry for place/drop judging
  Eigen::Vector3d place_region_center{0.0, 0.0, 0.0};
  Eigen::Vector3d place_region_size{0.0, 0.0, 0.0};
  bool drop_only = false;

  // object-frame pose at local time tau (piecewise linear / slerp between keyframes)
  RigidPose objectMotionAt(double tau) const;
  // world task pose given the latest object estimate
  RigidPose taskPoseAt(double tau, const RigidPose& object) const;
  // world-frame reference rates at tau: translation velocity and angular velocity
  void taskRateAt(double tau, const RigidPose& object, Eigen::Vector3d& v,
                  Eigen::Vector3d& w) const;
};

// Grasp candidate leaning `tilt` rad off the vertical, swept about the world
// z-axis by `yaw`; the approach (ee z) points down toward the object.
RigidPose tiltedGrasp(double yaw, double tilt);

struct Keypoint {
  RigidPose pose;      // world task pose sample
  int task_index = 0;
  double tau = 0.0;    // task-local time of the sample
};

// Uniform time sampling per task, concatenated in task order. Instant tasks
// produce exactly one keypoint, others ceil(duration/dt)+1.
std::vector<Keypoint> discretizeTasks(const std::vector<TaskSpec>& tasks,
                                      const std::vector<RigidPose>& object_poses,
                                      double dt_sample);

}  // namespace mmk
