#include "mmk/robot/diff_kinematics.hpp"

namespace mmk {

KinChain KinChain::at(const RobotDescription& robot, const WholeBodyState& state) {
  KinChain kc;
  kc.robot = &robot;
  kc.base = fkBase(state.base);
  kc.links = fkChain(robot, state);
  kc.axes.push_back(Eigen::Vector3d::UnitZ());
  kc.origins.emplace_back(state.base.x(), state.base.y(), 0.0);
  for (int l = 0; l < robot.jointCount(); ++l) {
    kc.axes.push_back(kc.links[l + 1].rotation * robot.joints[l].axis);
    kc.origins.push_back(kc.links[l + 1].translation);
  }
  return kc;
}

Eigen::MatrixXd KinChain::pointJacobian(int link, const Eigen::Vector3d& p) const {
  const int L = robot->jointCount();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, 3 + L);
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  const int nrot = rotCoordCount(link);
  for (int m = 0; m < nrot; ++m) {
    const Eigen::Vector3d col = axes[m].cross(p - origins[m]);
    if (m == 0)
      J.col(2) = col;
    else
      J.col(2 + m) = col;
  }
  return J;
}

Eigen::MatrixXd KinChain::directionJacobian(int link, const Eigen::Vector3d& dir) const {
  const int L = robot->jointCount();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, 3 + L);
  const int nrot = rotCoordCount(link);
  for (int m = 0; m < nrot; ++m) {
    const Eigen::Vector3d col = axes[m].cross(dir);
    if (m == 0)
      J.col(2) = col;
    else
      J.col(2 + m) = col;
  }
  return J;
}

Eigen::MatrixXd KinChain::velocityJacobian(int link, const Eigen::Vector3d& p,
                                           const Eigen::VectorXd& v_gen) const {
  const int L = robot->jointCount();
  const int nrot = rotCoordCount(link);
  // rotational rates: v_gen = (dx, dy, dpsi, dq_1..dq_L)
  auto rate = [&](int k) { return k == 0 ? v_gen[2] : v_gen[2 + k]; };

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3 + L);
  for (int m = 0; m < nrot; ++m) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int k = 0; k < nrot; ++k) {
      const Eigen::Vector3d jk = axes[k].cross(p - origins[k]);
      if (m < k) {
        // coordinate m rotates the whole sub-chain carrying axis k
        acc += rate(k) * axes[m].cross(jk);
      } else {
        // only the point p moves with coordinate m
        acc += rate(k) * axes[k].cross(axes[m].cross(p - origins[m]));
      }
    }
    if (m == 0)
      D.col(2) = acc;
    else
      D.col(2 + m) = acc;
  }
  return D;  // translation coordinates do not bend the jacobian
}

Eigen::MatrixXd KinChain::angularVelocityJacobian(int link, const Eigen::VectorXd& v_gen) const {
  const int L = robot->jointCount();
  const int nrot = rotCoordCount(link);
  auto rate = [&](int k) { return k == 0 ? v_gen[2] : v_gen[2 + k]; };
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3 + L);
  for (int m = 0; m < nrot; ++m) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int k = m + 1; k < nrot; ++k) acc += rate(k) * axes[m].cross(axes[k]);
    if (m == 0)
      D.col(2) = acc;
    else
      D.col(2 + m) = acc;
  }
  return D;
}

}  // namespace mmk
