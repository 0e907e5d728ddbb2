#include "mmk/geometry/ellipse.hpp"

#include <cmath>
#include <stdexcept>

namespace mmk {

Ellipse2::Ellipse2(const Eigen::Vector2d& o, const Eigen::Matrix2d& R, double a_, double b_)
    : center(o), orientation(R), a(a_), b(b_) {
  if (!(a >= b && b > 0.0)) throw std::invalid_argument("Ellipse2: requires a >= b > 0");
  if ((R * R.transpose() - Eigen::Matrix2d::Identity()).norm() > 1e-6)
    throw std::invalid_argument("Ellipse2: orientation not orthonormal");
}

Eigen::Vector2d Ellipse2::canonical(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d q = orientation.transpose() * (p - center);
  return {q.x() / a, q.y() / b};
}

Eigen::Vector2d Ellipse2::boundaryPoint(double phi) const {
  return center + orientation * Eigen::Vector2d(a * std::cos(phi), b * std::sin(phi));
}

double ellipseDistance(const Eigen::Vector2d& p, const Ellipse2& e, Eigen::Vector2d* dp) {
  if (dp) dp->setZero();
  const Eigen::Vector2d pt = e.canonical(p);
  const double n = pt.norm();
  if (n <= 1.0) return 0.0;
  // boundary point o + R Q pt/n collapses to o + (p - o)/n, so the distance is
  // ||p - o|| (1 - 1/n)
  const Eigen::Vector2d d = p - e.center;
  const double rw = d.norm();
  if (dp) {
    const Eigen::Matrix2d S = Eigen::Vector2d(1.0 / e.a, 1.0 / e.b).asDiagonal() *
                              e.orientation.transpose();
    const Eigen::Vector2d dn = S.transpose() * (S * d) / n;
    *dp = (1.0 - 1.0 / n) * d / rw + (rw / (n * n)) * dn;
  }
  return rw * (1.0 - 1.0 / n);
}

}  // namespace mmk
