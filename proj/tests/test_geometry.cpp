#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "mmk/geometry/ellipse.hpp"
#include "mmk/geometry/pose.hpp"
#include "mmk/geometry/smooth.hpp"

using namespace mmk;

namespace {

// central difference of a scalar function of one variable
template <typename F>
double cdiff(F f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

template <typename F>
Eigen::Vector3d cdiff3(F f, const Eigen::Vector3d& p, double h = 1e-6) {
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d a = p, b = p;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

}  // namespace

namespace {

// one-sided derivative estimates at x, O(h^3) stencils; side = +1 right, -1 left
template <typename F>
double oneSidedFirst(F f, double x, double h, int side) {
  const double s = side;
  return s * (-11.0 * f(x) + 18.0 * f(x + s * h) - 9.0 * f(x + 2 * s * h) + 2.0 * f(x + 3 * s * h)) /
         (6.0 * h);
}

template <typename F>
double oneSidedSecond(F f, double x, double h, int side) {
  const double s = side;
  return (35.0 * f(x) - 104.0 * f(x + s * h) + 114.0 * f(x + 2 * s * h) - 56.0 * f(x + 3 * s * h) +
          11.0 * f(x + 4 * s * h)) /
         (12.0 * h * h);
}

}  // namespace

TEST_CASE("smoothBlend golden values") {
  CHECK(smoothBlend(-1.0, -1.0, 1.0) == 0.0);
  CHECK(smoothBlend(0.0, -1.0, 1.0) == doctest::Approx(0.5));
  CHECK(smoothBlend(1.0, -1.0, 1.0) == 1.0);
  CHECK(smoothBlend(-2.0, -1.0, 1.0) == 0.0);
  CHECK(smoothBlend(2.0, -1.0, 1.0) == 1.0);
  CHECK_THROWS(smoothBlend(0.0, 1.0, 1.0));
}

TEST_CASE("smoothBlend is C2 at the knots and monotone on [0,1]") {
  for (double mu : {0.01, 0.1, 1.0}) {
    const double a = -mu, b = mu;
    auto f = [&](double x) { return smoothBlend(x, a, b); };
    const double h = 1e-2 * mu;
    for (double knot : {-mu, 0.0, mu}) {
      const double d1l = oneSidedFirst(f, knot, h, -1);
      const double d1r = oneSidedFirst(f, knot, h, +1);
      CHECK(std::abs(d1l - d1r) <= 1e-5 * std::max({std::abs(d1l), std::abs(d1r), 1.0 / mu}));
      const double d2l = oneSidedSecond(f, knot, h, -1);
      const double d2r = oneSidedSecond(f, knot, h, +1);
      CHECK(std::abs(d2l - d2r) <= 1e-5 * std::max({std::abs(d2l), std::abs(d2r), 1.0 / (mu * mu)}));
    }
    double prev = -1.0;
    for (double x = -2 * mu; x <= 2 * mu; x += mu / 37.0) {
      const double v = f(x);
      CHECK(v >= prev - 1e-15);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      prev = v;
    }
  }
}

TEST_CASE("recoveryRamp golden values and bounds") {
  CHECK(recoveryRamp(0.0, 0.05, 0.01) == 0.0);
  CHECK(recoveryRamp(0.07, 0.05, 0.01) == doctest::Approx(0.05));
  CHECK(recoveryRamp(0.03, 0.05, 0.01) == doctest::Approx(0.025));
  CHECK(recoveryRamp(0.12, 0.0, 0.01) == 0.0);
  CHECK_THROWS(recoveryRamp(0.1, 0.05, 0.06));

  double prev = -1.0;
  for (double x = 0.0; x < 0.08; x += 1e-4) {
    const double v = recoveryRamp(x, 0.05, 0.01);
    CHECK(v >= prev - 1e-15);
    CHECK(v <= std::min(x, 0.05) + 1e-12);
    prev = v;
  }
}

TEST_CASE("rayDistance branches") {
  const Eigen::Vector3d pr(0, 0, 0), vr(1, 0, 0);
  CHECK(rayDistance({2, 1, 0}, pr, vr, 0.5) == doctest::Approx(1.0));
  CHECK(rayDistance({-2, 0, 0}, pr, vr, 0.5) == doctest::Approx(2.0));
  Eigen::Vector3d g;
  CHECK(rayDistance(pr, pr, vr, 0.5, &g) == 0.0);
  CHECK(g.norm() == 0.0);
}

TEST_CASE("elasticRadius golden values") {
  const Eigen::Vector3d pt(0.4, 0.0, 0.1);
  // no shrinkage when the target is clear
  for (double off : {0.0, 0.03, 0.2}) {
    const Eigen::Vector3d p = pt + Eigen::Vector3d(off, 0, 0);
    CHECK(elasticRadius(pt, p, 0.1, 0.3, 0.05, 0.01) == doctest::Approx(0.1));
  }
  // deficit 0.05: esdf(pt) = r + margin - 0.05
  const double esdf = 0.1 + 0.05 - 0.05;
  CHECK(elasticRadius(pt, pt, 0.1, esdf, 0.05, 0.01) == doctest::Approx(0.05));
  const Eigen::Vector3d far = pt + Eigen::Vector3d(0.05 + 0.01, 0, 0);
  CHECK(elasticRadius(pt, far, 0.1, esdf, 0.05, 0.01) == doctest::Approx(0.1));
  // never exceeds r, gradient vanishes at the target
  Eigen::Vector3d g;
  elasticRadius(pt, pt, 0.1, esdf, 0.05, 0.01, &g);
  CHECK(g.norm() == doctest::Approx(0.0));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p = pt + Eigen::Vector3d(u(rng), u(rng), u(rng));
    CHECK(elasticRadius(pt, p, 0.1, esdf, 0.05, 0.01) <= 0.1 + 1e-12);
  }
}

TEST_CASE("ellipseDistance golden values and rigid invariance") {
  Ellipse2 circle({0, 0}, Eigen::Matrix2d::Identity(), 1.0, 1.0);
  CHECK(ellipseDistance({0.5, 0.0}, circle) == 0.0);
  CHECK(ellipseDistance({2.0, 0.0}, circle) == doctest::Approx(1.0));
  Ellipse2 e({0, 0}, Eigen::Matrix2d::Identity(), 2.0, 1.0);
  CHECK(ellipseDistance({4.0, 0.0}, e) == doctest::Approx(2.0));

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double th = u(rng);
    Eigen::Matrix2d R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Eigen::Vector2d t(u(rng), u(rng));
    const Eigen::Vector2d p(u(rng), u(rng));
    Ellipse2 moved(R * e.center + t, R * e.orientation, e.a, e.b);
    CHECK(ellipseDistance(R * p + t, moved) ==
          doctest::Approx(ellipseDistance(p, e)).epsilon(1e-9));
  }
}

TEST_CASE("quinticSmoothstep") {
  CHECK(quinticSmoothstep(0.0) == 0.0);
  CHECK(quinticSmoothstep(1.0) == 1.0);
  CHECK(quinticSmoothstep(0.5) == doctest::Approx(0.5));
  CHECK(quinticSmoothstepDeriv(0.0) == 0.0);
  CHECK(quinticSmoothstepDeriv(1.0) == doctest::Approx(0.0));
}

TEST_CASE("interpolatePose endpoints and geodesic scaling") {
  std::mt19937 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const Eigen::Quaterniond qa = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
    const Eigen::Quaterniond qb = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
    const RigidPose A(qa, Eigen::Vector3d(n(rng), n(rng), n(rng)));
    const RigidPose B(qb, Eigen::Vector3d(n(rng), n(rng), n(rng)));
    CHECK((interpolatePose(A, B, 0.0).translation - A.translation).norm() < 1e-12);
    CHECK(rotationAngle(interpolatePose(A, B, 0.0), A) < 1e-9);
    CHECK((interpolatePose(A, B, 1.0).translation - B.translation).norm() < 1e-12);
    CHECK(rotationAngle(interpolatePose(A, B, 1.0), B) < 1e-9);
    const double full = rotationAngle(A, B);
    for (double al : {0.25, 0.5, 0.75}) {
      CHECK(rotationAngle(A, interpolatePose(A, B, al)) == doctest::Approx(al * full).epsilon(1e-9));
    }
  }
  // fixed cases
  RigidPose P(Eigen::Quaterniond::Identity(), {0, 0, 0});
  CHECK((interpolatePose(P, P, 0.3).translation).norm() == 0.0);
  RigidPose T1(Eigen::Quaterniond::Identity(), {1, 0, 0});
  CHECK((interpolatePose(P, T1, 0.5).translation - Eigen::Vector3d(0.5, 0, 0)).norm() < 1e-12);
  RigidPose Rz(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ())), {0, 0, 0});
  CHECK(rotationAngle(interpolatePose(P, Rz, 0.5),
                      RigidPose(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 4, Eigen::Vector3d::UnitZ())), {0, 0, 0})) < 1e-9);
}

TEST_CASE("rotationAngle golden values") {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  CHECK(rotationAngle(I, I) == 0.0);
  CHECK(rotationAngle(I, rotationAboutAxis(Eigen::Vector3d::UnitZ(), M_PI)) == doctest::Approx(M_PI));
  CHECK(rotationAngle(I, rotationAboutAxis(Eigen::Vector3d::UnitZ(), M_PI / 2)) == doctest::Approx(M_PI / 2));
}

TEST_CASE("analytic gradients match central differences away from knots") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 3000 && checked < 1000; ++i) {
    const double mu = 0.1;
    const double x = 2.5 * u(rng);
    // skip knot-adjacent samples
    auto nearKnot = [&](double v, std::initializer_list<double> knots) {
      for (double k : knots)
        if (std::abs(v - k) < 1e-3) return true;
      return false;
    };

    if (!nearKnot(x, {-mu, 0.0, mu})) {
      double g = 0.0;
      smoothBlend(x, -mu, mu, &g);
      const double fd = cdiff([&](double v) { return smoothBlend(v, -mu, mu); }, x);
      CHECK(g == doctest::Approx(fd).epsilon(1e-4));
    }

    const double dv = 0.3;
    const double xs = std::abs(u(rng));
    if (!nearKnot(xs, {0.0, mu, dv, dv + mu})) {
      double g = 0.0;
      recoveryRamp(xs, dv, mu, &g);
      const double fd = cdiff([&](double v) { return recoveryRamp(v, dv, mu); }, xs);
      CHECK(g == doctest::Approx(fd).epsilon(1e-4));
    }

    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const Eigen::Vector3d pr(0.1, -0.2, 0.05);
    const Eigen::Vector3d vr = Eigen::Vector3d(0.3, 0.5, 1.0).normalized();
    const Eigen::Vector3d d = (p - pr).normalized();
    const double c = vr.dot(d);
    const double perp = ((p - pr) - vr * vr.dot(p - pr)).norm();
    if ((p - pr).norm() > 0.05 && !nearKnot(c, {-mu, 0.0, mu}) && perp > 1e-3) {
      Eigen::Vector3d g;
      rayDistance(p, pr, vr, mu, &g);
      const Eigen::Vector3d fd =
          cdiff3([&](const Eigen::Vector3d& q) { return rayDistance(q, pr, vr, mu); }, p);
      CHECK((g - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
    }

    const Eigen::Vector3d pt(0.0, 0.0, 0.0);
    const double r = 0.1, esdf = 0.08, margin = 0.05;  // deficit 0.07
    const double xr = p.norm();
    if (!nearKnot(xr, {0.0, 0.01, 0.07, 0.08}) && xr > 5e-3) {
      Eigen::Vector3d g;
      elasticRadius(pt, p, r, esdf, margin, 0.01, &g);
      const Eigen::Vector3d fd = cdiff3(
          [&](const Eigen::Vector3d& q) { return elasticRadius(pt, q, r, esdf, margin, 0.01); }, p);
      CHECK((g - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
    }

    Ellipse2 e({0.2, -0.1}, Eigen::Matrix2d::Identity(), 0.8, 0.4);
    const Eigen::Vector2d p2(2.0 * u(rng), 2.0 * u(rng));
    const double n = e.canonical(p2).norm();
    if (n > 1.05) {
      Eigen::Vector2d g2;
      ellipseDistance(p2, e, &g2);
      Eigen::Vector2d fd2;
      for (int k = 0; k < 2; ++k) {
        Eigen::Vector2d a = p2, b2 = p2;
        a[k] += 1e-6;
        b2[k] -= 1e-6;
        fd2[k] = (ellipseDistance(a, e) - ellipseDistance(b2, e)) / 2e-6;
      }
      CHECK((g2 - fd2).norm() <= 1e-4 * std::max(1.0, fd2.norm()));
    }
    ++checked;
  }
  CHECK(checked >= 1000);
}
