#include "mmk/robot/presets.hpp"

#include <cmath>

namespace mmk {

namespace {

RigidPose xyzRpy(double x, double y, double z, double roll, double pitch, double yaw) {
  const Eigen::Matrix3d R = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  return RigidPose(R, Eigen::Vector3d(x, y, z));
}

}  // namespace

RobotDescription makePlanarArm(const std::vector<double>& link_lengths, double mount_height) {
  RobotDescription d;
  d.name = "planar" + std::to_string(link_lengths.size());
  d.mount = xyzRpy(0.0, 0.0, mount_height, 0, 0, 0);
  double prev = 0.0;
  for (double len : link_lengths) {
    JointSpec j;
    j.origin = xyzRpy(prev, 0.0, 0.0, 0, 0, 0);
    j.axis = Eigen::Vector3d::UnitZ();
    j.q_min = -3.05;
    j.q_max = 3.05;
    j.omega_max = 3.0;
    j.alpha_max = 12.0;
    d.joints.push_back(j);
    prev = len;
  }
  // approach axis along the last link
  d.ee_frame = xyzRpy(prev, 0.0, 0.0, 0.0, M_PI / 2, 0.0);
  d.camera_frame = xyzRpy(prev * 0.5, 0.0, 0.05, 0.0, M_PI / 2, 0.0);
  d.spheres.push_back({0, {0.0, 0.0, 0.12}, 0.16});
  for (int l = 1; l <= d.jointCount(); ++l) {
    const double len = link_lengths[l - 1];
    d.spheres.push_back({l, {0.5 * len, 0.0, 0.0}, 0.05});
  }
  return d;
}

RobotDescription makeSpatialArm6() {
  RobotDescription d;
  d.name = "spatial6";
  d.base.wheel_radius = 0.06;
  d.base.wheel_separation = 0.2624;
  d.base.wheel_omega_max = 10.0;
  d.base.wheel_alpha_max = 40.0;
  d.base.v_min = 0.02;
  d.mount = xyzRpy(0.08, 0.0, 0.32, 0, 0, 0);

  auto joint = [&](double x, double y, double z, const Eigen::Vector3d& axis, double lo, double hi,
                   double wmax, double amax) {
    JointSpec j;
    j.origin = xyzRpy(x, y, z, 0, 0, 0);
    j.axis = axis;
    j.q_min = lo;
    j.q_max = hi;
    j.omega_max = wmax;
    j.alpha_max = amax;
    d.joints.push_back(j);
  };
  joint(0.0, 0.0, 0.055, Eigen::Vector3d::UnitZ(), -2.9, 2.9, 3.0, 12.0);   // waist
  joint(0.0, 0.0, 0.045, Eigen::Vector3d::UnitY(), -2.6, 2.6, 3.0, 12.0);   // shoulder
  joint(0.30, 0.0, 0.0, Eigen::Vector3d::UnitY(), -2.7, 2.7, 3.5, 14.0);    // elbow
  joint(0.22, 0.0, 0.0, Eigen::Vector3d::UnitY(), -2.2, 2.2, 3.5, 14.0);    // wrist pitch
  joint(0.07, 0.0, 0.0, Eigen::Vector3d::UnitZ(), -2.9, 2.9, 4.0, 16.0);    // wrist yaw
  joint(0.055, 0.0, 0.0, Eigen::Vector3d::UnitX(), -3.05, 3.05, 4.0, 16.0); // tool roll

  // gripper fingers along local +x; approach (ee z) = tool axis
  d.ee_frame = xyzRpy(0.11, 0.0, 0.0, 0.0, M_PI / 2, 0.0);
  // eye-in-hand camera above the wrist, optical axis pitched 0.35 rad off the
  // approach axis so the target stays in view during approach
  d.camera_frame = xyzRpy(0.02, 0.0, 0.055, 0.0, M_PI / 2 - 0.35, 0.0);

  d.spheres.push_back({0, {0.10, 0.0, 0.13}, 0.17});
  d.spheres.push_back({0, {-0.12, 0.0, 0.13}, 0.17});
  d.spheres.push_back({0, {0.0, 0.0, 0.30}, 0.12});
  d.spheres.push_back({2, {0.09, 0.0, 0.0}, 0.055});
  d.spheres.push_back({2, {0.21, 0.0, 0.0}, 0.055});
  d.spheres.push_back({3, {0.07, 0.0, 0.0}, 0.05});
  d.spheres.push_back({3, {0.16, 0.0, 0.0}, 0.05});
  d.spheres.push_back({5, {0.02, 0.0, 0.0}, 0.045});
  d.spheres.push_back({6, {0.04, 0.0, 0.0}, 0.04});
  return d;
}

}  // namespace mmk
