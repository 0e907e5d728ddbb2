#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mmk/traj/minco.hpp"

using namespace mmk;

namespace {

// independent jerk-energy oracle: Simpson quadrature on ||q'''||^2
double quadratureEnergy(const PiecewiseTrajectory& traj) {
  double e = 0.0;
  const int n = 2000;  // even
  for (int i = 0; i < traj.segments(); ++i) {
    const double T = traj.durations()[i], h = T / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * traj.evalLocal(i, k * h, 3).squaredNorm();
    }
    e += acc * h / 3.0;
  }
  return e;
}

// quintic Hermite segment matching endpoint pos/vel/acc: a feasible competitor
Eigen::MatrixXd hermiteQuintic(const Eigen::VectorXd& p0, const Eigen::VectorXd& v0,
                               const Eigen::VectorXd& a0, const Eigen::VectorXd& p1,
                               const Eigen::VectorXd& v1, const Eigen::VectorXd& a1, double T) {
  const int d = static_cast<int>(p0.size());
  Eigen::MatrixXd C(6, d);
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  A.row(0) = polyBasis(0, 0);
  A.row(1) = polyBasis(0, 1);
  A.row(2) = polyBasis(0, 2);
  A.row(3) = polyBasis(T, 0);
  A.row(4) = polyBasis(T, 1);
  A.row(5) = polyBasis(T, 2);
  Eigen::MatrixXd b(6, d);
  b << p0.transpose(), v0.transpose(), a0.transpose(), p1.transpose(), v1.transpose(),
      a1.transpose();
  C = A.fullPivLu().solve(b);
  return C;
}

}  // namespace

TEST_CASE("single-segment min-jerk boundary value problem") {
  BoundaryCondition s = BoundaryCondition::rest(Eigen::VectorXd::Zero(1));
  BoundaryCondition e = BoundaryCondition::rest(Eigen::VectorXd::Ones(1));
  MinJerkSpline spline;
  spline.fit(s, e, Eigen::MatrixXd::Zero(0, 1), Eigen::VectorXd::Ones(1));
  const auto traj = spline.trajectory();
  CHECK(traj.eval(0.5, 0)[0] == doctest::Approx(0.5).epsilon(1e-12));
  // known profile 10 t^3 - 15 t^4 + 6 t^5
  for (double t : {0.1, 0.3, 0.7, 0.9}) {
    const double expect = ((6 * t - 15) * t + 10) * t * t * t;
    CHECK(traj.eval(t, 0)[0] == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK((traj.eval(0.0, 0) - s.pos).norm() < 1e-12);
  CHECK((traj.eval(1.0, 0) - e.pos).norm() < 1e-12);
  CHECK(traj.eval(0.37, 6).norm() == 0.0);  // beyond the polynomial degree
}

TEST_CASE("rest-to-rest at the same point stays constant") {
  const Eigen::VectorXd p = Eigen::Vector3d(0.2, -0.4, 1.0);
  MinJerkSpline spline;
  spline.fit(BoundaryCondition::rest(p), BoundaryCondition::rest(p), Eigen::MatrixXd::Zero(0, 3),
             Eigen::VectorXd::Constant(1, 2.0));
  const auto traj = spline.trajectory();
  for (double t = 0.0; t <= 2.0; t += 0.1) {
    CHECK((traj.eval(t, 0) - p).norm() < 1e-10);
    CHECK(traj.eval(t, 1).norm() < 1e-10);
  }
  CHECK(spline.energy() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("junction continuity and interpolation on random multi-segment fits") {
  std::mt19937 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int M = 2 + trial % 4, d = 3;
    Eigen::MatrixXd wp(M - 1, d);
    for (int i = 0; i < wp.size(); ++i) wp(i / d, i % d) = n(rng);
    Eigen::VectorXd T(M);
    for (int i = 0; i < M; ++i) T[i] = 0.5 + std::abs(n(rng));
    BoundaryCondition s{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
    BoundaryCondition e{Eigen::VectorXd::Ones(d), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
    MinJerkSpline spline;
    spline.fit(s, e, wp, T);
    const auto traj = spline.trajectory();
    for (int i = 0; i < M - 1; ++i) {
      for (int k = 0; k <= 4; ++k) {
        const Eigen::VectorXd left = traj.evalLocal(i, T[i], k);
        const Eigen::VectorXd right = traj.evalLocal(i + 1, 0.0, k);
        CHECK((left - right).cwiseAbs().maxCoeff() < 1e-8);
      }
      CHECK((traj.eval(traj.junctionTime(i + 1), 0).transpose() - wp.row(i)).norm() < 1e-9);
    }
  }
}

TEST_CASE("closed-form energy matches quadrature") {
  std::mt19937 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd wp(2, 2);
  wp << 1.0, 0.5, 2.0, -0.5;
  Eigen::VectorXd T(3);
  T << 0.8, 1.3, 0.6;
  MinJerkSpline spline;
  spline.fit(BoundaryCondition::rest(Eigen::Vector2d(0, 0)),
             BoundaryCondition::rest(Eigen::Vector2d(3, 0)), wp, T);
  CHECK(spline.energy() == doctest::Approx(quadratureEnergy(spline.trajectory())).epsilon(1e-7));
}

TEST_CASE("optimality against random feasible competitors") {
  std::mt19937 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const int M = 3, d = 2;
  Eigen::MatrixXd wp(M - 1, d);
  wp << 0.7, 0.2, 1.4, -0.3;
  Eigen::VectorXd T(M);
  T << 1.0, 0.9, 1.2;
  const BoundaryCondition s = BoundaryCondition::rest(Eigen::Vector2d(0, 0));
  const BoundaryCondition e = BoundaryCondition::rest(Eigen::Vector2d(2, 0));
  MinJerkSpline spline;
  spline.fit(s, e, wp, T);
  const double optimal = spline.energy();

  // competitors: same waypoints and boundary conditions, random junction
  // velocities/accelerations, C2 quintic Hermite per segment
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::VectorXd pv = s.pos, vv = s.vel, av = s.acc;
    for (int i = 0; i < M; ++i) {
      Eigen::VectorXd p1(d), v1(d), a1(d);
      if (i == M - 1) {
        p1 = e.pos;
        v1 = e.vel;
        a1 = e.acc;
      } else {
        p1 = wp.row(i).transpose();
        for (int k = 0; k < d; ++k) {
          v1[k] = n(rng);
          a1[k] = n(rng);
        }
      }
      blocks.push_back(hermiteQuintic(pv, vv, av, p1, v1, a1, T[i]));
      pv = p1;
      vv = v1;
      av = a1;
    }
    PiecewiseTrajectory competitor(blocks, T);
    CHECK(quadratureEnergy(competitor) >= optimal - 1e-6);
  }
}

TEST_CASE("uniform time scaling scales derivatives") {
  Eigen::MatrixXd wp(1, 1);
  wp << 0.8;
  Eigen::VectorXd T(2);
  T << 0.9, 1.1;
  MinJerkSpline a, b;
  a.fit(BoundaryCondition::rest(Eigen::VectorXd::Zero(1)),
        BoundaryCondition::rest(Eigen::VectorXd::Ones(1)), wp, T);
  const double lam = 1.7;
  b.fit(BoundaryCondition::rest(Eigen::VectorXd::Zero(1)),
        BoundaryCondition::rest(Eigen::VectorXd::Ones(1)), wp, lam * T);
  const auto ta = a.trajectory(), tb = b.trajectory();
  for (double t : {0.15, 0.6, 1.2, 1.9}) {
    for (int k = 0; k <= 3; ++k) {
      const double va = ta.eval(t, k)[0];
      const double vb = tb.eval(lam * t, k)[0];
      CHECK(vb == doctest::Approx(va * std::pow(lam, -k)).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("gradient propagation matches finite differences") {
  // loss: sum over fixed per-segment fractions of ||q(u)||^2 weighted by T_i,
  // plus a direct time term; gradients flow through the banded adjoint
  const int M = 3, d = 2;
  const std::vector<double> fracs{0.23, 0.61, 0.87};

  auto buildLoss = [&](const Eigen::MatrixXd& wp, const Eigen::VectorXd& T,
                       const Eigen::VectorXd& tailp) {
    MinJerkSpline s;
    s.fit(BoundaryCondition::rest(Eigen::Vector2d(0, 0)),
          BoundaryCondition{tailp, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()}, wp, T);
    const auto traj = s.trajectory();
    double L = 0.0;
    for (int i = 0; i < M; ++i)
      for (double f : fracs) L += T[i] * traj.evalLocal(i, f * T[i], 0).squaredNorm();
    L += 3.0 * T.sum();
    return std::make_pair(L, std::move(s));
  };

  Eigen::MatrixXd wp(M - 1, d);
  wp << 0.4, -0.2, 1.1, 0.5;
  Eigen::VectorXd T(M);
  T << 0.7, 1.2, 0.9;
  Eigen::VectorXd tailp = Eigen::Vector2d(1.8, 0.3);

  auto [L0, spline] = buildLoss(wp, T, tailp);
  (void)L0;

  // analytic dL/dC and direct dL/dT
  Eigen::MatrixXd dC = Eigen::MatrixXd::Zero(6 * M, d);
  Eigen::VectorXd dT = Eigen::VectorXd::Constant(M, 3.0);
  const auto traj = spline.trajectory();
  for (int i = 0; i < M; ++i) {
    for (double f : fracs) {
      const double u = f * T[i];
      const Eigen::VectorXd q = traj.evalLocal(i, u, 0);
      const Eigen::VectorXd dq = traj.evalLocal(i, u, 1);
      dC.middleRows(6 * i, 6) += 2.0 * T[i] * polyBasis(u, 0) * q.transpose();
      dT[i] += q.squaredNorm() + 2.0 * T[i] * f * q.dot(dq);
    }
  }
  const SplineGradients g = spline.propagate(dC, dT);

  const double h = 1e-6;
  for (int i = 0; i < M - 1; ++i)
    for (int k = 0; k < d; ++k) {
      Eigen::MatrixXd wp2 = wp;
      wp2(i, k) += h;
      auto [Lp, s1] = buildLoss(wp2, T, tailp);
      wp2(i, k) -= 2 * h;
      auto [Lm, s2] = buildLoss(wp2, T, tailp);
      CHECK(g.waypoints(i, k) == doctest::Approx((Lp - Lm) / (2 * h)).epsilon(1e-5));
    }
  for (int i = 0; i < M; ++i) {
    Eigen::VectorXd T2 = T;
    T2[i] += h;
    auto [Lp, s1] = buildLoss(wp, T2, tailp);
    T2[i] -= 2 * h;
    auto [Lm, s2] = buildLoss(wp, T2, tailp);
    CHECK(g.durations[i] == doctest::Approx((Lp - Lm) / (2 * h)).epsilon(1e-5));
  }
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd t2 = tailp;
    t2[k] += h;
    auto [Lp, s1] = buildLoss(wp, T, t2);
    t2[k] -= 2 * h;
    auto [Lm, s2] = buildLoss(wp, T, t2);
    CHECK(g.tail(0, k) == doctest::Approx((Lp - Lm) / (2 * h)).epsilon(1e-5));
  }

  // zero cost gradient propagates to zero
  const SplineGradients gz =
      spline.propagate(Eigen::MatrixXd::Zero(6 * M, d), Eigen::VectorXd::Zero(M));
  CHECK(gz.waypoints.norm() == 0.0);
  CHECK(gz.durations.norm() == 0.0);
}

TEST_CASE("energy gradients match finite differences") {
  const int M = 2, d = 2;
  Eigen::MatrixXd wp(M - 1, d);
  wp << 0.5, -0.1;
  Eigen::VectorXd T(M);
  T << 0.8, 1.1;
  auto fitEnergy = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& t) {
    MinJerkSpline s;
    s.fit(BoundaryCondition::rest(Eigen::Vector2d(0, 0)),
          BoundaryCondition::rest(Eigen::Vector2d(1, 1)), w, t);
    return std::make_pair(s.energy(), std::move(s));
  };
  auto [E, spline] = fitEnergy(wp, T);
  (void)E;
  Eigen::MatrixXd dC;
  Eigen::VectorXd dT;
  spline.energyGradients(dC, dT);
  const SplineGradients g = spline.propagate(dC, dT);
  const double h = 1e-6;
  for (int k = 0; k < d; ++k) {
    Eigen::MatrixXd w2 = wp;
    w2(0, k) += h;
    auto [Ep, s1] = fitEnergy(w2, T);
    w2(0, k) -= 2 * h;
    auto [Em, s2] = fitEnergy(w2, T);
    CHECK(g.waypoints(0, k) == doctest::Approx((Ep - Em) / (2 * h)).epsilon(1e-4));
  }
  for (int i = 0; i < M; ++i) {
    Eigen::VectorXd T2 = T;
    T2[i] += h;
    auto [Ep, s1] = fitEnergy(wp, T2);
    T2[i] -= 2 * h;
    auto [Em, s2] = fitEnergy(wp, T2);
    CHECK(g.durations[i] == doctest::Approx((Ep - Em) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("trajectory record round trip") {
  Eigen::MatrixXd wp(1, 2);
  wp << 0.3, 0.9;
  Eigen::VectorXd T(2);
  T << 0.8, 1.4;
  MinJerkSpline s;
  s.fit(BoundaryCondition::rest(Eigen::Vector2d(0, 0)),
        BoundaryCondition::rest(Eigen::Vector2d(1, 2)), wp, T);
  auto traj = s.trajectory();
  traj.perception_durations[0] = 3.0;
  const std::string text = traj.serialize();
  const auto back = PiecewiseTrajectory::parse(text);
  CHECK(back.serialize() == text);
  for (double t : {0.0, 0.5, 1.3, 2.2}) {
    CHECK((back.eval(t, 0) - traj.eval(t, 0)).norm() < 1e-15);
    CHECK((back.eval(t, 2) - traj.eval(t, 2)).norm() < 1e-15);
  }
  CHECK(back.perception_durations.at(0) == 3.0);
}
