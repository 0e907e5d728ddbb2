#include "mmk/robot/kinematics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmk {

RigidPose fkBase(const Eigen::Vector3d& base) {
  return RigidPose(Eigen::Quaterniond(Eigen::AngleAxisd(base.z(), Eigen::Vector3d::UnitZ())),
                   Eigen::Vector3d(base.x(), base.y(), 0.0));
}

std::vector<RigidPose> fkChain(const RobotDescription& desc, const WholeBodyState& state) {
  if (state.arm.size() != desc.jointCount())
    throw std::invalid_argument("fkChain: state does not match description");
  std::vector<RigidPose> chain;
  chain.reserve(desc.jointCount() + 1);
  RigidPose T = fkBase(state.base) * desc.mount;
  chain.push_back(T);
  for (int l = 0; l < desc.jointCount(); ++l) {
    const auto& j = desc.joints[l];
    const RigidPose rot(Eigen::Quaterniond(Eigen::AngleAxisd(state.arm[l], j.axis)),
                        Eigen::Vector3d::Zero());
    T = T * j.origin * rot;
    chain.push_back(T);
  }
  return chain;
}

RigidPose fkLink(const RobotDescription& desc, const WholeBodyState& state, int link) {
  if (link < 0 || link > desc.jointCount())
    throw std::invalid_argument("fkLink: unknown link index");
  if (link == 0) return fkBase(state.base);
  return fkChain(desc, state)[link];
}

RigidPose fkFrame(const RobotDescription& desc, const WholeBodyState& state, FrameId frame) {
  const auto chain = fkChain(desc, state);
  switch (frame) {
    case FrameId::ArmBase:
      return chain.front();
    case FrameId::Ee:
      return chain.back() * desc.ee_frame;
    case FrameId::Camera:
      return chain.back() * desc.camera_frame;
  }
  throw std::invalid_argument("fkFrame: unknown frame");
}

Eigen::MatrixXd jacobianAt(const RobotDescription& desc, const WholeBodyState& state,
                           const RigidPose& attached) {
  const int L = desc.jointCount();
  const auto chain = fkChain(desc, state);
  const Eigen::Vector3d p = (chain.back() * attached).translation;

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, 3 + L);
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  // yaw spins the whole body about the vertical through the base origin
  const Eigen::Vector3d pb(state.base.x(), state.base.y(), 0.0);
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();
  J.block<3, 1>(0, 2) = ez.cross(p - pb);
  J.block<3, 1>(3, 2) = ez;
  for (int l = 0; l < L; ++l) {
    // joint l rotates about its axis expressed in the link-l frame
    const Eigen::Vector3d axis_w = chain[l + 1].rotation * desc.joints[l].axis;
    const Eigen::Vector3d origin_w = chain[l + 1].translation;
    J.block<3, 1>(0, 3 + l) = axis_w.cross(p - origin_w);
    J.block<3, 1>(3, 3 + l) = axis_w;
  }
  return J;
}

Eigen::MatrixXd jacobianEe(const RobotDescription& desc, const WholeBodyState& state) {
  return jacobianAt(desc, state, desc.ee_frame);
}

std::vector<SpherePlacement> collisionSpherePositions(const RobotDescription& desc,
                                                      const WholeBodyState& state) {
  const auto chain = fkChain(desc, state);
  const RigidPose base = fkBase(state.base);
  std::vector<SpherePlacement> out;
  out.reserve(desc.spheres.size());
  for (const auto& s : desc.spheres) {
    const RigidPose& T = (s.link == 0) ? base : chain[s.link];
    out.push_back({T.apply(s.center), s.radius, s.link});
  }
  return out;
}

double selfClearance(const RobotDescription& desc, const WholeBodyState& state) {
  const auto spheres = collisionSpherePositions(desc, state);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < spheres.size(); ++i) {
    for (size_t j = i + 1; j < spheres.size(); ++j) {
      if (std::abs(spheres[i].link - spheres[j].link) <= 1) continue;
      const double c =
          (spheres[i].center - spheres[j].center).norm() - spheres[i].radius - spheres[j].radius;
      best = std::min(best, c);
    }
  }
  return best;
}

std::pair<double, double> wheelRates(double v, double omega_b, const BaseParams& base) {
  const double inv = 1.0 / (2.0 * base.wheel_radius);
  return {(2.0 * v - base.wheel_separation * omega_b) * inv,
          (2.0 * v + base.wheel_separation * omega_b) * inv};
}

WheelState wheelRatesFromPath(const Eigen::Vector2d& dq, const Eigen::Vector2d& ddq,
                              const Eigen::Vector2d& dddq, const BaseParams& base) {
  const double sq = dq.squaredNorm();
  const double v = std::sqrt(sq);
  if (v < base.v_min)
    throw std::domain_error("wheelRatesFromPath: base speed below v_min, quotients ill-defined");
  auto crossB = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    // a^T B b with B = [[0,-1],[1,0]]
    return -a.x() * b.y() + a.y() * b.x();
  };
  WheelState w{};
  w.omega_b = crossB(ddq, dq) / sq;
  w.alpha_b = crossB(dddq, dq) / sq - 2.0 * crossB(ddq, dq) * ddq.dot(dq) / (sq * sq);
  const double a_lin = dq.dot(ddq) / v;
  const double inv = 1.0 / (2.0 * base.wheel_radius);
  w.omega_l = (2.0 * v - base.wheel_separation * w.omega_b) * inv;
  w.omega_r = (2.0 * v + base.wheel_separation * w.omega_b) * inv;
  w.alpha_l = (2.0 * a_lin - base.wheel_separation * w.alpha_b) * inv;
  w.alpha_r = (2.0 * a_lin + base.wheel_separation * w.alpha_b) * inv;
  return w;
}

}  // namespace mmk
