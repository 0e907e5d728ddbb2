#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace mmk {

// Rigid transform in SE(3): unit-quaternion rotation + translation.
// Quaternions keep normalization cheap and make interpolation unambiguous;
// conversion to a rotation matrix happens only where a trace is needed.
struct RigidPose {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  RigidPose() = default;
  RigidPose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
      : rotation(q.normalized()), translation(t) {}
  RigidPose(const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
      : rotation(Eigen::Quaterniond(R).normalized()), translation(t) {}

  static RigidPose Identity() { return RigidPose(); }

  RigidPose inverse() const {
    const Eigen::Quaterniond qi = rotation.conjugate();
    return RigidPose(qi, qi * (-translation));
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  Eigen::Matrix3d matrix() const { return rotation.toRotationMatrix(); }

  // z-axis of the rotation, the [.]_z extractor used by approach-ray terms.
  Eigen::Vector3d zAxis() const { return rotation * Eigen::Vector3d::UnitZ(); }

  Eigen::Vector2d xy() const { return translation.head<2>(); }
};

inline RigidPose operator*(const RigidPose& a, const RigidPose& b) {
  return RigidPose(Eigen::Quaterniond(a.rotation * b.rotation), a.rotation * b.translation + a.translation);
}

// Geodesic angle arccos(0.5 tr(R1^T R2) - 0.5); the arccos argument is clamped
// to [-1, 1] so roundoff cannot leave the domain.
double rotationAngle(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2);
double rotationAngle(const RigidPose& a, const RigidPose& b);

// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 with vanishing first and second
// derivatives at both ends. Input is clamped to [0, 1] (asserted in debug).
double quinticSmoothstep(double tau);
double quinticSmoothstepDeriv(double tau);

// SLERP for rotation, linear interpolation for translation. Antipodal
// quaternion pairs take the shorter arc via a sign flip.
RigidPose interpolatePose(const RigidPose& A, const RigidPose& B, double alpha);

Eigen::Matrix3d rotationAboutAxis(const Eigen::Vector3d& axis, double angle);

// Rotation vector (axis * angle) of R.
Eigen::Vector3d logSO3(const Eigen::Matrix3d& R);

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace mmk
