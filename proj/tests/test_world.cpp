#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mmk/world/esdf.hpp"
#include "mmk/world/scene.hpp"

using namespace mmk;

namespace {

OccupancyGrid emptyGrid(int n, double res = 0.05) {
  OccupancyGrid occ;
  occ.resolution = res;
  occ.dims = {n, n, n};
  occ.origin = {0.0, 0.0, 0.0};
  occ.occupied.assign(static_cast<size_t>(n) * n * n, 0);
  return occ;
}

// brute-force signed distance at voxel centers
double bruteSigned(const OccupancyGrid& occ, int x, int y, int z, double cap) {
  const bool inside = occ.at(x, y, z);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < occ.dims.z(); ++k)
    for (int j = 0; j < occ.dims.y(); ++j)
      for (int i = 0; i < occ.dims.x(); ++i) {
        if (occ.at(i, j, k) == inside) continue;
        const double d = occ.resolution * std::sqrt(double((i - x) * (i - x) + (j - y) * (j - y) +
                                                           (k - z) * (k - z)));
        best = std::min(best, d);
      }
  if (best == std::numeric_limits<double>::infinity()) best = cap;
  best = std::min(best, cap);
  return inside ? -best : best;
}

}  // namespace

TEST_CASE("esdf equals brute force on small random grids") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 4; ++trial) {
    auto occ = emptyGrid(9 + 2 * trial);
    std::uniform_int_distribution<int> ui(0, occ.dims.x() - 1);
    const int blobs = 4 + trial;
    for (int b = 0; b < blobs; ++b) occ.set(ui(rng), ui(rng), ui(rng), true);
    const auto esdf = EsdfGrid::build(occ, 5.0);
    for (int z = 0; z < occ.dims.z(); ++z)
      for (int y = 0; y < occ.dims.y(); ++y)
        for (int x = 0; x < occ.dims.x(); ++x)
          CHECK(esdf.voxelValue(x, y, z) ==
                doctest::Approx(bruteSigned(occ, x, y, z, 5.0)).epsilon(1e-6));
  }
}

TEST_CASE("esdf single-voxel golden values") {
  auto occ = emptyGrid(12);
  occ.set(2, 2, 2, true);
  const auto esdf = EsdfGrid::build(occ, 5.0);
  CHECK(esdf.voxelValue(5, 6, 2) == doctest::Approx(5.0 * 0.05));  // (3,4,0) offset
  CHECK(esdf.voxelValue(2, 2, 2) <= 0.0);
}

TEST_CASE("esdf empty grid saturates at the cap") {
  const auto esdf = EsdfGrid::build(emptyGrid(6), 5.0);
  for (int z = 0; z < 6; ++z)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) CHECK(esdf.voxelValue(x, y, z) == doctest::Approx(5.0));
}

TEST_CASE("trilinear query: centers, midpoints, continuity, gradient") {
  auto occ = emptyGrid(10);
  for (int z = 0; z < 10; ++z)
    for (int y = 0; y < 10; ++y) occ.set(0, y, z, true);  // occupied wall at x=0
  const auto esdf = EsdfGrid::build(occ, 5.0);

  CHECK(esdf.query(occ.center(4, 5, 5)).value == doctest::Approx(esdf.voxelValue(4, 5, 5)));
  const double mid = esdf.query(0.5 * (occ.center(4, 5, 5) + occ.center(5, 5, 5))).value;
  CHECK(mid == doctest::Approx(0.5 * (esdf.voxelValue(4, 5, 5) + esdf.voxelValue(5, 5, 5))));

  // continuity across voxel faces
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.07, 0.4);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    for (int ax = 0; ax < 3; ++ax) {
      Eigen::Vector3d q = p;
      const double face = std::round((p[ax] - 0.025) / 0.05) * 0.05 + 0.025;
      q[ax] = face;
      Eigen::Vector3d qa = q, qb = q;
      qa[ax] += 1e-10;
      qb[ax] -= 1e-10;
      CHECK(std::abs(esdf.query(qa).value - esdf.query(qb).value) < 1e-8);
    }
  }

  // gradient matches central differences away from faces
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d p(u(rng), u(rng), u(rng));
    // keep clear of cell faces
    for (int ax = 0; ax < 3; ++ax) {
      const double cell = (p[ax] - 0.025) / 0.05;
      if (std::abs(cell - std::round(cell)) < 0.1)
        p[ax] += 0.012;
    }
    const auto q = esdf.query(p);
    for (int ax = 0; ax < 3; ++ax) {
      Eigen::Vector3d a = p, b = p;
      a[ax] += 1e-7;
      b[ax] -= 1e-7;
      const double fd = (esdf.query(a).value - esdf.query(b).value) / 2e-7;
      CHECK(q.gradient[ax] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }

  // out of bounds is clamped and flagged
  CHECK(esdf.query({-1.0, 0.2, 0.2}).clamped);
  CHECK_FALSE(esdf.query({0.2, 0.2, 0.2}).clamped);
}

TEST_CASE("lipschitz sanity on a scene") {
  SceneDescription scene;
  scene.bounds_min = {0, 0, 0};
  scene.bounds_max = {2, 2, 1};
  scene.boxes.push_back({{1.0, 1.0, 0.3}, {0.4, 0.6, 0.6}});
  scene.cylinders.push_back({{0.5, 1.5}, 0.0, 0.8, 0.15});
  const auto occ = scene.rasterize();
  const auto esdf = scene.buildEsdf();
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> ux(0, occ.dims.x() - 1), uy(0, occ.dims.y() - 1),
      uz(0, occ.dims.z() - 1);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3i a(ux(rng), uy(rng), uz(rng)), b(ux(rng), uy(rng), uz(rng));
    const double da = esdf.voxelValue(a.x(), a.y(), a.z());
    const double db = esdf.voxelValue(b.x(), b.y(), b.z());
    const double dist = (occ.center(a.x(), a.y(), a.z()) - occ.center(b.x(), b.y(), b.z())).norm();
    CHECK(std::abs(da - db) <= dist + 2.0 * occ.resolution + 1e-9);
  }
}

TEST_CASE("predictObstacle") {
  DynamicObstacle obs;
  obs.position = {0.0, 0.0};
  obs.velocity = {1.0, 0.0};
  CHECK((predictObstacle(obs, 0.0) - Eigen::Vector2d(0, 0)).norm() == 0.0);
  CHECK((predictObstacle(obs, 2.5) - Eigen::Vector2d(2.5, 0)).norm() < 1e-12);
  obs.velocity = {0.0, 0.0};
  CHECK((predictObstacle(obs, 100.0) - obs.position).norm() == 0.0);
}
