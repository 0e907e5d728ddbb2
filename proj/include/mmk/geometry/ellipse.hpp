#pragma once

#include <Eigen/Dense>

namespace mmk {

// Planar ellipse { o + R Q v : ||v|| <= 1 }, Q = diag(a, b) with a >= b > 0.
struct Ellipse2 {
  Eigen::Vector2d center{0.0, 0.0};
  Eigen::Matrix2d orientation = Eigen::Matrix2d::Identity();
  double a = 1.0;
  double b = 1.0;

  Ellipse2() = default;
  Ellipse2(const Eigen::Vector2d& o, const Eigen::Matrix2d& R, double a_, double b_);

  // Image of p in the canonical frame, Q^{-1} R^T (p - o).
  Eigen::Vector2d canonical(const Eigen::Vector2d& p) const;

  bool contains(const Eigen::Vector2d& p) const { return canonical(p).norm() <= 1.0; }

  // Point on the boundary at canonical angle phi.
  Eigen::Vector2d boundaryPoint(double phi) const;
};

// Distance from p to the ellipse by radial projection: 0 inside, otherwise the
// distance to the boundary point o + R Q ptilde/||ptilde||. This is the radial
// approximation, not the true nearest boundary point.
double ellipseDistance(const Eigen::Vector2d& p, const Ellipse2& e,
                       Eigen::Vector2d* dp = nullptr);

}  // namespace mmk
