#include "mmk/world/esdf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform (Felzenszwalb & Huttenlocher), f -> min_q (p-q)^2 + f(q)
void dt1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
          std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  out.assign(n, kInf);
  int first = -1;
  for (int q = 0; q < n; ++q)
    if (f[q] < kInf) {
      first = q;
      break;
    }
  if (first < 0) return;
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (k > 0 && s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    if (s <= z[k]) {
      v[k] = q;  // replaces the only remaining parabola
    } else {
      ++k;
      v[k] = q;
      z[k] = s;
    }
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    out[q] = static_cast<double>(q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

// exact squared EDT of the 'seed' set over the grid, in voxel units
std::vector<double> edt3d(const OccupancyGrid& occ, bool seed_occupied) {
  const int nx = occ.dims.x(), ny = occ.dims.y(), nz = occ.dims.z();
  std::vector<double> d(static_cast<size_t>(nx) * ny * nz);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        d[occ.index(x, y, z)] = (occ.at(x, y, z) == seed_occupied) ? 0.0 : kInf;

  std::vector<double> f, g;
  std::vector<int> v;
  std::vector<double> zbuf;
  // x pass
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y) {
      f.resize(nx);
      for (int x = 0; x < nx; ++x) f[x] = d[occ.index(x, y, z)];
      dt1d(f, g, v, zbuf);
      for (int x = 0; x < nx; ++x) d[occ.index(x, y, z)] = g[x];
    }
  // y pass
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) {
      f.resize(ny);
      for (int y = 0; y < ny; ++y) f[y] = d[occ.index(x, y, z)];
      dt1d(f, g, v, zbuf);
      for (int y = 0; y < ny; ++y) d[occ.index(x, y, z)] = g[y];
    }
  // z pass
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      f.resize(nz);
      for (int z = 0; z < nz; ++z) f[z] = d[occ.index(x, y, z)];
      dt1d(f, g, v, zbuf);
      for (int z = 0; z < nz; ++z) d[occ.index(x, y, z)] = g[z];
    }
  return d;
}

}  // namespace

Eigen::Vector3i OccupancyGrid::voxelOf(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d rel = (p - origin) / resolution;
  return {static_cast<int>(std::lround(rel.x())), static_cast<int>(std::lround(rel.y())),
          static_cast<int>(std::lround(rel.z()))};
}

EsdfGrid EsdfGrid::build(const OccupancyGrid& occ, double cap) {
  if (occ.occupied.empty()) throw std::invalid_argument("EsdfGrid::build: empty grid");
  EsdfGrid g;
  g.origin_ = occ.origin;
  g.resolution_ = occ.resolution;
  g.dims_ = occ.dims;
  g.cap_ = cap;
  g.values_.resize(occ.occupied.size());

  const auto d_out = edt3d(occ, true);   // distance to nearest occupied
  const auto d_in = edt3d(occ, false);   // distance to nearest free
  const double res = occ.resolution;
  for (size_t i = 0; i < occ.occupied.size(); ++i) {
    double v;
    if (occ.occupied[i]) {
      v = (d_in[i] == kInf) ? -cap : -std::min(cap, res * std::sqrt(d_in[i]));
    } else {
      v = (d_out[i] == kInf) ? cap : std::min(cap, res * std::sqrt(d_out[i]));
    }
    g.values_[i] = static_cast<float>(v);
  }
  return g;
}

EsdfQuery EsdfGrid::query(const Eigen::Vector3d& p) const {
  EsdfQuery out;
  Eigen::Vector3d rel = (p - origin_) / resolution_;
  for (int i = 0; i < 3; ++i) {
    const double hi = static_cast<double>(dims_[i] - 1);
    if (rel[i] < 0.0 || rel[i] > hi) {
      out.clamped = true;
      rel[i] = std::clamp(rel[i], 0.0, hi);
    }
  }
  // trilinear interpolation over the 8 surrounding voxel centers
  Eigen::Vector3i i0;
  Eigen::Vector3d frac;
  for (int i = 0; i < 3; ++i) {
    i0[i] = std::min(static_cast<int>(std::floor(rel[i])), dims_[i] - 2);
    i0[i] = std::max(i0[i], 0);
    frac[i] = rel[i] - i0[i];
    if (dims_[i] == 1) {
      i0[i] = 0;
      frac[i] = 0.0;
    }
  }
  auto val = [&](int dx, int dy, int dz) -> double {
    const int x = std::min(i0.x() + dx, dims_.x() - 1);
    const int y = std::min(i0.y() + dy, dims_.y() - 1);
    const int z = std::min(i0.z() + dz, dims_.z() - 1);
    return values_[occ_index(x, y, z)];
  };
  const double fx = frac.x(), fy = frac.y(), fz = frac.z();
  const double c00 = val(0, 0, 0) * (1 - fx) + val(1, 0, 0) * fx;
  const double c10 = val(0, 1, 0) * (1 - fx) + val(1, 1, 0) * fx;
  const double c01 = val(0, 0, 1) * (1 - fx) + val(1, 0, 1) * fx;
  const double c11 = val(0, 1, 1) * (1 - fx) + val(1, 1, 1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  out.value = c0 * (1 - fz) + c1 * fz;

  const double dx = ((val(1, 0, 0) - val(0, 0, 0)) * (1 - fy) + (val(1, 1, 0) - val(0, 1, 0)) * fy) * (1 - fz) +
                    ((val(1, 0, 1) - val(0, 0, 1)) * (1 - fy) + (val(1, 1, 1) - val(0, 1, 1)) * fy) * fz;
  const double dy = (c10 - c00) * (1 - fz) + (c11 - c01) * fz;
  const double dz = c1 - c0;
  out.gradient = Eigen::Vector3d(dx, dy, dz) / resolution_;
  if (out.clamped) out.gradient.setZero();
  return out;
}

}  // namespace mmk
