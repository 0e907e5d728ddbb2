#include "mmk/geometry/pose.hpp"

#include <cassert>
#include <cmath>

namespace mmk {

double rotationAngle(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2) {
  const double c = 0.5 * (R1.transpose() * R2).trace() - 0.5;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double rotationAngle(const RigidPose& a, const RigidPose& b) {
  // same geodesic angle as the trace form, via quaternions for accuracy near 0
  const Eigen::Quaterniond qd = a.rotation.conjugate() * b.rotation;
  return 2.0 * std::atan2(qd.vec().norm(), std::abs(qd.w()));
}

double quinticSmoothstep(double tau) {
  assert(tau > -1e-9 && tau < 1.0 + 1e-9);
  tau = std::clamp(tau, 0.0, 1.0);
  return ((6.0 * tau - 15.0) * tau + 10.0) * tau * tau * tau;
}

double quinticSmoothstepDeriv(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return ((30.0 * tau - 60.0) * tau + 30.0) * tau * tau;
}

RigidPose interpolatePose(const RigidPose& A, const RigidPose& B, double alpha) {
  Eigen::Quaterniond qb = B.rotation;
  if (A.rotation.dot(qb) < 0.0) qb.coeffs() = -qb.coeffs();
  return RigidPose(A.rotation.slerp(alpha, qb),
                   (1.0 - alpha) * A.translation + alpha * B.translation);
}

Eigen::Matrix3d rotationAboutAxis(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Eigen::Vector3d logSO3(const Eigen::Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

}  // namespace mmk
