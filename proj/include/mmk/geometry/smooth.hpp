#pragma once

#include <Eigen/Dense>

namespace mmk {

// Half-width of the C2 blending band shared by the smooth penalty functions.
struct SmoothParams {
  double mu = 0.01;
};

// C2 quartic blend. With xbar = x - 0.5(a+b) and mu = 0.5(b-a):
//   0                                    xbar <= -mu
//   (xbar+mu)^3 (mu-xbar) / (2 mu^4)     -mu < xbar <= 0
//   (xbar+mu)(xbar-mu)^3 / (2 mu^4) + 1  0 < xbar <= mu
//   1                                    xbar > mu
// Requires a < b. Optional derivative wrt x.
double smoothBlend(double x, double a, double b, double* dx = nullptr);

// Monotone recovery ramp from 0 to d_v: cubic start with zero slope at x = 0,
// unit-slope linear phase, smooth saturation, constant d_v for x >= d_v + mu.
// d_v = 0 returns 0 identically; otherwise requires 0 < mu < d_v.
double recoveryRamp(double x, double d_v, double mu, double* dx = nullptr);

// Smooth distance from p to the ray (origin, dir): Euclidean distance to the
// origin behind the ray, perpendicular distance in front, blended through
// smoothBlend of the direction cosine. dir must be unit length.
// p == origin returns 0 with zero gradient.
double rayDistance(const Eigen::Vector3d& p, const Eigen::Vector3d& origin,
                   const Eigen::Vector3d& dir, double mu,
                   Eigen::Vector3d* dp = nullptr);

// Elastic sphere radius: the conservative radius r shrinks at the intended
// contact point by the clearance deficit max(0, r + margin - esdf_at_target)
// and recovers to r with distance from the target through recoveryRamp.
// Gradient wrt p vanishes at p == target.
double elasticRadius(const Eigen::Vector3d& target, const Eigen::Vector3d& p,
                     double r, double esdf_at_target, double margin, double mu,
                     Eigen::Vector3d* dp = nullptr);

}  // namespace mmk
