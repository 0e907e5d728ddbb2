#include "mmk/geometry/smooth.hpp"

#include <cmath>
#include <stdexcept>

namespace mmk {

double smoothBlend(double x, double a, double b, double* dx) {
  if (!(a < b)) throw std::invalid_argument("smoothBlend: requires a < b");
  const double mu = 0.5 * (b - a);
  const double xb = x - 0.5 * (a + b);
  const double inv = 1.0 / (2.0 * mu * mu * mu * mu);
  if (dx) *dx = 0.0;
  if (xb <= -mu) return 0.0;
  if (xb > mu) return 1.0;
  if (xb <= 0.0) {
    const double u = xb + mu;
    if (dx) *dx = (3.0 * u * u * (mu - xb) - u * u * u) * inv;
    return u * u * u * (mu - xb) * inv;
  }
  const double u = xb + mu, v = xb - mu;
  if (dx) *dx = (v * v * v + 3.0 * u * v * v) * inv;
  return u * v * v * v * inv + 1.0;
}

double recoveryRamp(double x, double d_v, double mu, double* dx) {
  if (dx) *dx = 0.0;
  if (d_v <= 0.0) return 0.0;
  if (!(mu > 0.0 && mu < d_v))
    throw std::invalid_argument("recoveryRamp: requires 0 < mu < d_v");
  if (x < 0.0) x = 0.0;
  const double inv3 = 1.0 / (mu * mu * mu);
  if (x < mu) {
    // (mu - x/2) (x/mu)^3
    if (dx) *dx = (-0.5 * x * x * x + 3.0 * x * x * (mu - 0.5 * x)) * inv3;
    return (mu - 0.5 * x) * x * x * x * inv3;
  }
  if (x < d_v) {
    if (dx) *dx = 1.0;
    return x - 0.5 * mu;
  }
  if (x < d_v + mu) {
    const double xb = d_v + mu - x;
    if (dx) *dx = (-0.5 * xb * xb * xb + 3.0 * xb * xb * (mu - 0.5 * xb)) * inv3;
    return d_v - (mu - 0.5 * xb) * xb * xb * xb * inv3;
  }
  return d_v;
}

double rayDistance(const Eigen::Vector3d& p, const Eigen::Vector3d& origin,
                   const Eigen::Vector3d& dir, double mu, Eigen::Vector3d* dp) {
  constexpr double kTiny = 1e-12;
  const Eigen::Vector3d d = p - origin;
  const double r = d.norm();
  if (dp) dp->setZero();
  if (r < kTiny) return 0.0;  // both branches agree at zero offset

  const Eigen::Vector3d u = d / r;
  const double c = dir.dot(u);
  double ds = 0.0;
  const double s = smoothBlend(c, -mu, mu, &ds);

  const Eigen::Vector3d perp = d - dir * dir.dot(d);
  const double pn = perp.norm();
  const double f = (1.0 - s) * r + s * pn;
  if (dp) {
    Eigen::Vector3d g = (1.0 - s) * u;
    if (pn > kTiny) g += (s / pn) * perp;
    g += ds * (pn - r) * (dir - c * u) / r;
    *dp = g;
  }
  return f;
}

double elasticRadius(const Eigen::Vector3d& target, const Eigen::Vector3d& p,
                     double r, double esdf_at_target, double margin, double mu,
                     Eigen::Vector3d* dp) {
  const double d_v = std::max(0.0, r + margin - esdf_at_target);
  if (dp) dp->setZero();
  if (d_v <= 0.0) return r;
  // degenerate phase ordering: keep the four phases valid for tiny deficits
  const double mu_eff = std::min(mu, 0.5 * d_v);
  const Eigen::Vector3d d = p - target;
  const double x = d.norm();
  double dxr = 0.0;
  const double rec = recoveryRamp(x, d_v, mu_eff, &dxr);
  if (dp && x > 1e-12) *dp = dxr * d / x;
  return r - d_v + rec;
}

}  // namespace mmk
