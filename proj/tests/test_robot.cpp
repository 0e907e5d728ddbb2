#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mmk/robot/ik.hpp"
#include "mmk/robot/kinematics.hpp"
#include "mmk/robot/presets.hpp"

using namespace mmk;

namespace {

WholeBodyState randomState(const RobotDescription& d, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd q(d.jointCount());
  for (int i = 0; i < d.jointCount(); ++i) {
    std::uniform_real_distribution<double> uq(d.joints[i].q_min, d.joints[i].q_max);
    q[i] = 0.8 * uq(rng);
  }
  return WholeBodyState(Eigen::Vector3d(u(rng), u(rng), M_PI * u(rng)), q);
}

// closed-form 2-link planar IK (elbow up/down) about the arm base
std::vector<Eigen::Vector2d> twoLinkIk(double l1, double l2, double x, double y) {
  std::vector<Eigen::Vector2d> sols;
  const double r2 = x * x + y * y;
  const double c2 = (r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2);
  if (std::abs(c2) > 1.0) return sols;
  for (double sign : {1.0, -1.0}) {
    const double q2 = sign * std::acos(c2);
    const double q1 = std::atan2(y, x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    sols.push_back({q1, q2});
  }
  return sols;
}

}  // namespace

TEST_CASE("fk straight chain and base composition") {
  const auto d = makePlanarArm({1.0, 1.0});
  WholeBodyState s(Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(2));
  const RigidPose ee = fkFrame(d, s, FrameId::Ee);
  CHECK((ee.translation - Eigen::Vector3d(2.0, 0.0, 0.3)).norm() < 1e-12);

  s.base = Eigen::Vector3d(0.0, 0.0, M_PI / 2);
  const RigidPose ee2 = fkFrame(d, s, FrameId::Ee);
  CHECK((ee2.translation - Eigen::Vector3d(0.0, 2.0, 0.3)).norm() < 1e-12);

  // arm base = base pose composed with mount
  const RigidPose ab = fkFrame(d, s, FrameId::ArmBase);
  const RigidPose expect = fkBase(s.base) * d.mount;
  CHECK((ab.translation - expect.translation).norm() < 1e-12);
  CHECK(rotationAngle(ab, expect) < 1e-12);
}

TEST_CASE("fk ee equals last link composed with ee_frame") {
  const auto d = makeSpatialArm6();
  std::mt19937 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto s = randomState(d, rng);
    const RigidPose a = fkFrame(d, s, FrameId::Ee);
    const RigidPose b = fkLink(d, s, d.jointCount()) * d.ee_frame;
    CHECK((a.translation - b.translation).norm() < 1e-12);
    CHECK(rotationAngle(a, b) < 1e-12);
  }
}

TEST_CASE("jacobian columns: lever arm and yaw") {
  const auto d = makePlanarArm({1.0, 1.0});
  WholeBodyState s(Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(2));
  const Eigen::MatrixXd J = jacobianEe(d, s);
  REQUIRE(J.rows() == 6);
  REQUIRE(J.cols() == 5);
  CHECK((J.block<3, 1>(0, 3) - Eigen::Vector3d(0.0, 2.0, 0.0)).norm() < 1e-12);
  CHECK((J.block<3, 1>(3, 2) - Eigen::Vector3d(0.0, 0.0, 1.0)).norm() < 1e-12);
}

TEST_CASE("jacobian matches finite-difference fk at 100 random states") {
  const auto d = makeSpatialArm6();
  std::mt19937 rng(17);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = randomState(d, rng);
    const Eigen::MatrixXd J = jacobianEe(d, s);
    for (int c = 0; c < J.cols(); ++c) {
      WholeBodyState sp = s, sm = s;
      if (c < 3) {
        sp.base[c] += h;
        sm.base[c] -= h;
      } else {
        sp.arm[c - 3] += h;
        sm.arm[c - 3] -= h;
      }
      const RigidPose fp = fkFrame(d, sp, FrameId::Ee), fm = fkFrame(d, sm, FrameId::Ee);
      const Eigen::Vector3d dlin = (fp.translation - fm.translation) / (2 * h);
      const Eigen::Matrix3d dR = (fp.matrix() - fm.matrix()) / (2 * h);
      const Eigen::Matrix3d W = dR * fkFrame(d, s, FrameId::Ee).matrix().transpose();
      const Eigen::Vector3d dang(W(2, 1), W(0, 2), W(1, 0));
      CHECK((J.block<3, 1>(0, c) - dlin).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((J.block<3, 1>(3, c) - dang).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("wheel rates substitution cases") {
  BaseParams base;  // r_w = 0.06, d_w = 0.2624
  auto [l0, r0] = wheelRates(0.3, 0.0, base);
  CHECK(l0 == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r0 == doctest::Approx(5.0).epsilon(1e-12));
  auto [l1, r1] = wheelRates(0.1, 0.5, base);
  CHECK(l1 == doctest::Approx((0.2 - 0.2624 * 0.5) / 0.12).epsilon(1e-12));
  CHECK(r1 == doctest::Approx(2.76).epsilon(1e-12));
  // omega sign flip swaps the wheels
  auto [l2, r2] = wheelRates(0.1, -0.5, base);
  CHECK(l2 == doctest::Approx(r1));
  CHECK(r2 == doctest::Approx(l1));
}

TEST_CASE("wheel rates from path derivatives") {
  BaseParams base;
  SUBCASE("straight constant speed") {
    const auto w = wheelRatesFromPath({0.3, 0.0}, {0.0, 0.0}, {0.0, 0.0}, base);
    CHECK(w.omega_l == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(w.omega_r == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(w.alpha_l == doctest::Approx(0.0));
    CHECK(w.alpha_r == doctest::Approx(0.0));
  }
  SUBCASE("circular path quotient equals v/rho") {
    const double v = 0.25, rho = 0.8;
    const double th = 0.7;  // point on the circle
    const double om = v / rho;
    const Eigen::Vector2d dq(-v * std::sin(th), v * std::cos(th));
    const Eigen::Vector2d ddq(-v * om * std::cos(th), -v * om * std::sin(th));
    const Eigen::Vector2d dddq(v * om * om * std::sin(th), -v * om * om * std::cos(th));
    const auto w = wheelRatesFromPath(dq, ddq, dddq, base);
    CHECK(w.omega_b == doctest::Approx(om).epsilon(1e-8));
    CHECK(w.alpha_b == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  }
  SUBCASE("zero speed is a guarded singularity") {
    CHECK_THROWS(wheelRatesFromPath({0.0, 0.0}, {0.1, 0.0}, {0.0, 0.0}, base));
  }
}

TEST_CASE("collision sphere placement") {
  const auto d = makeSpatialArm6();
  WholeBodyState s(Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(6));
  const auto spheres = collisionSpherePositions(d, s);
  CHECK(spheres.size() == d.spheres.size());
  // base translation moves every sphere rigidly
  WholeBodyState s2 = s;
  s2.base = Eigen::Vector3d(1.0, -2.0, 0.0);
  const auto spheres2 = collisionSpherePositions(d, s2);
  for (size_t i = 0; i < spheres.size(); ++i) {
    const Eigen::Vector3d expect = spheres[i].center + Eigen::Vector3d(1.0, -2.0, 0.0);
    CHECK((spheres2[i].center - expect).norm() < 1e-12);
  }
  // agreement with per-link fk composition
  std::mt19937 rng(23);
  const auto sr = randomState(d, rng);
  const auto placed = collisionSpherePositions(d, sr);
  for (size_t i = 0; i < placed.size(); ++i) {
    const auto& cs = d.spheres[i];
    const RigidPose T = cs.link == 0 ? fkBase(sr.base) : fkLink(d, sr, cs.link);
    CHECK((placed[i].center - T.apply(cs.center)).norm() < 1e-12);
  }
}

TEST_CASE("ik reconstructs fk targets and reports unreachable") {
  const auto d = makeSpatialArm6();
  std::mt19937 rng(31);
  int recovered = 0;
  for (int i = 0; i < 10; ++i) {
    const auto s = randomState(d, rng);
    const RigidPose target = fkFrame(d, s, FrameId::Ee);
    const auto sols = solveIk(d, target, s.base, s.arm);
    bool ok = false;
    for (const auto& q : sols) {
      WholeBodyState check(s.base, q);
      const RigidPose ee = fkFrame(d, check, FrameId::Ee);
      CHECK((ee.translation - target.translation).norm() <= 1e-4);
      CHECK(rotationAngle(ee.matrix(), target.matrix()) <= 1e-3);
      CHECK(d.withinLimits(q));
      if ((q - s.arm).cwiseAbs().maxCoeff() < 1e-2) ok = true;
    }
    if (ok) ++recovered;
  }
  CHECK(recovered >= 8);  // seeded with the generating state, fixed point expected

  // far beyond total reach
  const RigidPose far(Eigen::Quaterniond::Identity(), {10.0, 0.0, 0.5});
  CHECK(solveIk(d, far, Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(6)).empty());
}

TEST_CASE("ik finds both planar elbow branches") {
  const auto d = makePlanarArm({1.0, 1.0});
  // target expressed relative to the arm base at mount height
  const double tx = 1.0, ty = 1.0;
  const auto oracle = twoLinkIk(1.0, 1.0, tx, ty);
  REQUIRE(oracle.size() == 2);
  IkOptions opts;
  opts.position_only = true;
  opts.restarts = 8;
  const RigidPose target(Eigen::Quaterniond::Identity(), {tx, ty, 0.3});
  const auto sols = solveIk(d, target, Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(2), opts);
  REQUIRE(sols.size() >= 2);
  for (const auto& qo : oracle) {
    bool found = false;
    for (const auto& q : sols) {
      if ((q - Eigen::Vector2d(qo)).cwiseAbs().maxCoeff() < 1e-3) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("description round trip") {
  const auto d = makeSpatialArm6();
  const std::string text = d.serialize();
  const auto d2 = RobotDescription::parse(text);
  CHECK(d2.serialize() == text);
  CHECK(d2.contentHash() == d.contentHash());
  CHECK(d2.jointCount() == 6);
  std::mt19937 rng(9);
  const auto s = randomState(d, rng);
  CHECK((fkFrame(d, s, FrameId::Ee).translation - fkFrame(d2, s, FrameId::Ee).translation).norm() <
        1e-12);
  CHECK((fkFrame(d, s, FrameId::Camera).translation - fkFrame(d2, s, FrameId::Camera).translation)
            .norm() < 1e-12);
}
