#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "mmk/reach/cmz.hpp"
#include "mmk/robot/ik.hpp"
#include "mmk/robot/presets.hpp"

using namespace mmk;

namespace {

const RobotDescription& planar() {
  static const RobotDescription d = makePlanarArm({0.30, 0.25, 0.15});
  return d;
}

const InverseReachabilityMap& planarIrm() {
  static const InverseReachabilityMap irm = [] {
    IrmParams p;
    p.sweep_budget = 16000;
    return InverseReachabilityMap::build(planar(), p);
  }();
  return irm;
}

Eigen::VectorXd sweepConfig(const RobotDescription& d, int per_joint,
                            const std::vector<int>& idx) {
  Eigen::VectorXd q(d.jointCount());
  for (int j = 0; j < d.jointCount(); ++j) {
    const auto& js = d.joints[j];
    q[j] = js.q_min + (js.q_max - js.q_min) * idx[j] / (per_joint - 1.0);
  }
  return q;
}

// the map marginalizes a continuous base yaw into bins, so verification may
// try any yaw
bool ikVerifies(const RobotDescription& d, const RigidPose& P, const Eigen::Vector2d& cell) {
  IkOptions opts;
  opts.restarts = 6;
  opts.max_iterations = 80;
  for (int j = 0; j < 32; ++j) {
    const double psi = 2.0 * M_PI * j / 32;
    const auto sols = solveIk(d, P, Eigen::Vector3d(cell.x(), cell.y(), psi),
                              Eigen::VectorXd::Zero(d.jointCount()), opts);
    if (!sols.empty()) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("irm contains the generating base position") {
  const auto& d = planar();
  const auto& irm = planarIrm();
  const int per_joint = 25;  // floor(16000^(1/3))
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> u(3, per_joint - 4);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 12; ++trial) {
    const Eigen::VectorXd q = sweepConfig(d, per_joint, {u(rng), u(rng), u(rng)});
    WholeBodyState s(Eigen::Vector3d::Zero(), q);
    if (selfClearance(d, s) < 0.0) continue;
    const RigidPose P = fkFrame(d, s, FrameId::Ee);
    const auto cells = irm.basePositions(P);
    REQUIRE(!cells.empty());
    double best = 1e9;
    for (const auto& c : cells) best = std::min(best, c.norm());
    CHECK(best <= irm.params().base_grid * 1.5 + 1e-9);
    ++checked;
  }
  CHECK(checked >= 12);
}

TEST_CASE("irm: unreachable pose yields the empty set") {
  const auto& irm = planarIrm();
  const RigidPose high(Eigen::Quaterniond::Identity(), {0.0, 0.0, 3.0});
  CHECK(irm.basePositions(high).empty());
}

TEST_CASE("irm: max-reach pose puts the base behind the target") {
  const auto& d = planar();
  const auto& irm = planarIrm();
  // straight-ahead approach at full extension from the generating config
  WholeBodyState s(Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(3));
  const RigidPose P = fkFrame(d, s, FrameId::Ee);  // at (0.70, 0, 0.3), approach +x
  const auto cells = irm.basePositions(P);
  REQUIRE(!cells.empty());
  const Eigen::Vector2d target = P.translation.head<2>();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& c : cells) {
    CHECK((c - target).norm() <= d.maxReach() + 2.0 * irm.params().base_grid);
    mean += c;
  }
  mean /= static_cast<double>(cells.size());
  // approach is +x, so the base mass sits on the -x side of the target
  CHECK(mean.x() < target.x() - 0.1);
}

TEST_CASE("irm soundness: cmz intersection cells admit ik solutions (<= 5% binning FPs)") {
  // needs the full spatial arm: a planar arm's workspace is a measure-zero
  // slice of the position bins, so sphere samples cannot be met in exact IK
  const auto d = makeSpatialArm6();
  const auto irm = InverseReachabilityMap::build(d);
  std::mt19937 rng(11);
  int total = 0, failed = 0;
  Eigen::VectorXd q1(6), q2(6);
  q1 << 0.2, 0.7, -0.9, 0.9, 0.3, 0.0;
  q2 << -0.4, 0.5, -0.7, 1.2, -0.2, 0.0;
  for (const auto& q : {q1, q2}) {
    const RigidPose nominal = fkFrame(d, WholeBodyState(Eigen::Vector3d::Zero(), q), FrameId::Ee);
    CmzParams p;
    p.r_cmz = 0.03;
    p.delta_tilt = 0.1;
    p.dphi = M_PI / 2;
    p.dtheta = M_PI / 2;
    p.dpsi = M_PI / 2;
    const auto region = computeCmzEllipse(nominal, p, irm);
    REQUIRE(region.status == CmzStatus::Ok);
    CmzParams used = p;
    used.r_cmz = region.used_r_cmz;
    const auto samples = sampleCmz(nominal, used);
    auto cells = region.cells;
    std::shuffle(cells.begin(), cells.end(), rng);
    cells.resize(std::min<size_t>(cells.size(), 5));
    for (const auto& c : cells) {
      for (const auto& pose : samples.poses) {
        ++total;
        if (!ikVerifies(d, pose, c)) ++failed;
      }
    }
  }
  REQUIRE(total > 0);
  INFO("cell-level false positive rate: ", double(failed) / total);
  CHECK(double(failed) / total <= 0.05);
}

TEST_CASE("coverage ellipse of a uniform rectangle") {
  std::vector<Eigen::Vector2d> cells;
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 11; ++j) cells.push_back({1.0 + 0.05 * i, -2.0 + 0.05 * j});
  const Ellipse2 e = fitCoverageEllipse(cells, 0.95);
  CHECK(e.center.x() == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(e.center.y() == doctest::Approx(-1.75).epsilon(1e-9));
  CHECK(e.a >= e.b);
  int inside = 0;
  for (const auto& c : cells) inside += e.contains(c) ? 1 : 0;
  CHECK(inside >= static_cast<int>(std::ceil(0.95 * cells.size())));
  // principal axis aligned with the long side
  CHECK(std::abs(e.orientation(0, 0)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cmz sampling counts and degenerate cases") {
  CmzParams p;
  p.dphi = M_PI / 2;
  p.dtheta = M_PI / 2;
  p.dpsi = 2 * M_PI;
  p.r_cmz = 0.05;
  p.delta_tilt = 0.1;
  const RigidPose nominal(Eigen::Quaterniond::Identity(), {0.5, 0.0, 0.3});
  const auto set = sampleCmz(nominal, p);
  CHECK(set.raw_position_count == (4 + 1) * (2 + 1));

  CmzParams degen = p;
  degen.r_cmz = 0.0;
  degen.delta_tilt = 0.0;
  const auto single = sampleCmz(nominal, degen);
  REQUIRE(single.poses.size() == 1);
  CHECK((single.poses[0].translation - nominal.translation).norm() < 1e-12);
  CHECK(rotationAngle(single.poses[0], nominal) < 1e-12);
}

TEST_CASE("cmz sampling discards colliding samples") {
  // occupied half-space below z = 0.3
  OccupancyGrid occ;
  occ.resolution = 0.05;
  occ.origin = {0.0, 0.0, 0.0};
  occ.dims = {24, 24, 16};
  occ.occupied.assign(24 * 24 * 16, 0);
  for (int z = 0; z < 6; ++z)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) occ.set(x, y, z, true);
  const auto esdf = EsdfGrid::build(occ, 5.0);

  CmzParams p;
  p.r_cmz = 0.08;
  p.delta_tilt = 0.0;
  p.sphere_radius = 0.03;
  const RigidPose nominal(Eigen::Quaterniond::Identity(), {0.6, 0.6, 0.33});
  const auto set = sampleCmz(nominal, p, &esdf);
  REQUIRE(!set.poses.empty());
  for (const auto& pose : set.poses) {
    CHECK(esdf.valueAt(pose.translation) >= p.sphere_radius);
    // lower-hemisphere samples sit in the slab and must have been discarded
  }
  bool any_below = false;
  for (const auto& pose : set.poses) any_below |= pose.translation.z() < 0.30;
  CHECK_FALSE(any_below);
}

TEST_CASE("cmz region: single sample equals the plain reachable-set fit") {
  const auto& irm = planarIrm();
  const RigidPose nominal =
      fkFrame(planar(), WholeBodyState(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.4, 0.5, -0.3)),
              FrameId::Ee);
  CmzSampleSet single;
  single.poses.push_back(nominal);
  single.r_cmz = 0.0;
  const auto region = cmzRegion(single, irm);
  REQUIRE(region.status == CmzStatus::Ok);
  const auto direct = irm.basePositions(nominal);
  CHECK(region.cells.size() == direct.size());
  const Ellipse2 fit = fitCoverageEllipse(direct);
  CHECK((region.ellipse.center - fit.center).norm() < 1e-12);
  CHECK(region.ellipse.a == doctest::Approx(fit.a));
}

TEST_CASE("cmz region: disjoint reachable sets signal margin reduction") {
  const auto& irm = planarIrm();
  const RigidPose a =
      fkFrame(planar(), WholeBodyState(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.1, 0.2, 0.1)),
              FrameId::Ee);
  RigidPose b = a;
  b.translation += Eigen::Vector3d(5.0, 0.0, 0.0);  // far outside any shared base set
  CmzSampleSet set;
  set.poses = {a, b};
  set.r_cmz = 5.0;
  CHECK(cmzRegion(set, irm).status == CmzStatus::ReduceMargin);
}

TEST_CASE("cmz margin reduction shrinks r until feasible; area monotone in r") {
  const auto& irm = planarIrm();
  const RigidPose nominal =
      fkFrame(planar(), WholeBodyState(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.3, 0.4, -0.2)),
              FrameId::Ee);
  CmzParams p;
  p.delta_tilt = 0.0;  // planar arm cannot tilt the approach axis
  size_t prev_cells = std::numeric_limits<size_t>::max();
  for (double r : {0.08, 0.04, 0.02}) {
    CmzParams pr = p;
    pr.r_cmz = r;
    const auto set = sampleCmz(nominal, pr);
    const auto region = cmzRegion(set, irm);
    if (region.status == CmzStatus::Ok) {
      CHECK(region.cells.size() <= prev_cells);
      prev_cells = region.cells.size();
    }
  }
  const auto full = computeCmzEllipse(nominal, p, irm);
  CHECK(full.status == CmzStatus::Ok);
  CHECK(full.used_r_cmz > 0.0);
}

TEST_CASE("keypoint ellipse: union over grasps, unreachable error") {
  const auto& irm = planarIrm();
  const auto& d = planar();
  const RigidPose object(Eigen::Quaterniond::Identity(), {0.45, 0.1, 0.3});
  // grasp candidates: horizontal approaches from two sides
  std::vector<RigidPose> grasps;
  grasps.emplace_back(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitY())),
                      Eigen::Vector3d::Zero());
  grasps.emplace_back(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitZ()) *
                                         Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitY())),
                      Eigen::Vector3d::Zero());
  const Ellipse2 both = keypointEllipse(object, grasps, irm);
  const Ellipse2 single = keypointEllipse(object, {grasps[0]}, irm);
  CHECK(both.a * both.b >= single.a * single.b * 0.8);  // union at least comparable

  const RigidPose far(Eigen::Quaterniond::Identity(), {0.0, 0.0, 5.0});
  CHECK_THROWS(keypointEllipse(far, grasps, irm));
  (void)d;
}

TEST_CASE("irm cache round trip") {
  const auto& d = planar();
  IrmParams p;
  p.sweep_budget = 3000;
  const auto irm = InverseReachabilityMap::build(d, p);
  const std::string path = "/tmp/mmk_irm_test.bin";
  irm.saveCache(path);
  const auto loaded = InverseReachabilityMap::loadCache(path, d, p);
  REQUIRE(loaded.has_value());
  CHECK(loaded->binCount() == irm.binCount());
  const RigidPose P =
      fkFrame(d, WholeBodyState(Eigen::Vector3d::Zero(), Eigen::Vector3d(0.2, 0.3, 0.1)),
              FrameId::Ee);
  CHECK(loaded->baseCells(P) == irm.baseCells(P));
  // stale cache (different params) is rejected
  IrmParams p2 = p;
  p2.sweep_budget = 3001;
  CHECK_FALSE(InverseReachabilityMap::loadCache(path, d, p2).has_value());
  std::remove(path.c_str());
}
