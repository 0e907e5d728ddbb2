#include "mmk/reach/irm.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

namespace mmk {

namespace {

// the 26 cube-neighbor directions, normalized
const std::vector<Eigen::Vector3d>& approachDirs() {
  static const std::vector<Eigen::Vector3d> dirs = [] {
    std::vector<Eigen::Vector3d> d;
    for (int x = -1; x <= 1; ++x)
      for (int y = -1; y <= 1; ++y)
        for (int z = -1; z <= 1; ++z) {
          if (x == 0 && y == 0 && z == 0) continue;
          d.push_back(Eigen::Vector3d(x, y, z).normalized());
        }
    return d;
  }();
  return dirs;
}

int dirBin(const Eigen::Vector3d& v) {
  const auto& dirs = approachDirs();
  int best = 0;
  double bestDot = -2.0;
  for (size_t i = 0; i < dirs.size(); ++i) {
    const double d = dirs[i].dot(v);
    if (d > bestDot) {
      bestDot = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// true when rotating the last joint leaves the ee position and approach axis
// unchanged (tool roll); such a joint is skipped in the sweep
bool lastJointIsToolRoll(const RobotDescription& desc) {
  if (desc.joints.empty()) return false;
  const Eigen::Vector3d axis = desc.joints.back().axis;
  const Eigen::Vector3d z_ee = desc.ee_frame.rotation * Eigen::Vector3d::UnitZ();
  if (axis.cross(z_ee).norm() > 1e-9) return false;
  return axis.cross(desc.ee_frame.translation).norm() < 1e-9;
}

}  // namespace

InverseReachabilityMap InverseReachabilityMap::build(const RobotDescription& desc,
                                                     const IrmParams& params, int threads) {
  InverseReachabilityMap irm;
  irm.params_ = params;
  irm.desc_hash_ = desc.contentHash();

  const int L = desc.jointCount();
  const bool skip_last = lastJointIsToolRoll(desc);
  const int swept = skip_last ? L - 1 : L;

  int per_joint = std::max(3, static_cast<int>(std::floor(std::pow(
                                  static_cast<double>(params.sweep_budget), 1.0 / std::max(1, swept)))));
  per_joint = std::min(per_joint, 25);

  std::vector<int> counts(L, per_joint);
  if (skip_last) counts[L - 1] = 1;
  long total = 1;
  for (int c : counts) total *= c;

  const int nthreads = std::max(1, threads);
  std::vector<std::set<std::pair<uint32_t, std::pair<int16_t, int16_t>>>> partial(nthreads);

  auto worker = [&](int tid) {
    auto& sink = partial[tid];
    WholeBodyState state(Eigen::Vector3d::Zero(), Eigen::VectorXd::Zero(L));
    std::vector<int> idx(L, 0);
    for (long flat = tid; flat < total; flat += nthreads) {
      long rem = flat;
      for (int j = 0; j < L; ++j) {
        idx[j] = static_cast<int>(rem % counts[j]);
        rem /= counts[j];
      }
      for (int j = 0; j < L; ++j) {
        const auto& js = desc.joints[j];
        state.arm[j] = counts[j] == 1
                           ? 0.5 * (js.q_min + js.q_max)
                           : js.q_min + (js.q_max - js.q_min) * idx[j] / (counts[j] - 1.0);
      }
      if (skip_last) state.arm[L - 1] = 0.0;
      if (selfClearance(desc, state) < params.min_self_clearance) continue;
      const RigidPose ee = fkFrame(desc, state, FrameId::Ee);
      const Eigen::Vector3d rel = ee.translation;  // base at identity
      const int ix = static_cast<int>(std::lround(rel.x() / params.ee_voxel));
      const int iy = static_cast<int>(std::lround(rel.y() / params.ee_voxel));
      const int iz = static_cast<int>(std::lround(rel.z() / params.ee_voxel));
      const int dir = dirBin(ee.zAxis());
      if (std::abs(ix) > 30000 || std::abs(iy) > 30000 || std::abs(iz) > 4000) continue;
      sink.insert({binKey(dir, iz), {static_cast<int16_t>(ix), static_cast<int16_t>(iy)}});
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
  for (auto& th : pool) th.join();

  for (const auto& sink : partial)
    for (const auto& [key, off] : sink) irm.bins_[key].push_back(off);
  for (auto& [key, offs] : irm.bins_) {
    std::sort(offs.begin(), offs.end());
    offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
  }
  return irm;
}

int64_t InverseReachabilityMap::cellOf(const Eigen::Vector2d& p) const {
  const int64_t cx = static_cast<int64_t>(std::lround(p.x() / params_.base_grid));
  const int64_t cy = static_cast<int64_t>(std::lround(p.y() / params_.base_grid));
  return (cx << 32) ^ (cy & 0xffffffffll);
}

Eigen::Vector2d InverseReachabilityMap::cellCenter(int64_t key) const {
  const int32_t cx = static_cast<int32_t>(key >> 32);
  const int32_t cy = static_cast<int32_t>(key & 0xffffffffll);
  return {cx * params_.base_grid, cy * params_.base_grid};
}

std::vector<int64_t> InverseReachabilityMap::baseCells(const RigidPose& P) const {
  std::set<int64_t> cells;
  const Eigen::Vector3d z_w = P.zAxis();
  const int iz = static_cast<int>(std::lround(P.translation.z() / params_.ee_voxel));
  for (int j = 0; j < params_.yaw_bins; ++j) {
    const double psi = 2.0 * M_PI * j / params_.yaw_bins;
    const Eigen::Matrix2d Rz = Eigen::Rotation2Dd(psi).toRotationMatrix();
    const Eigen::Vector3d z_rel(std::cos(psi) * z_w.x() + std::sin(psi) * z_w.y(),
                                -std::sin(psi) * z_w.x() + std::cos(psi) * z_w.y(), z_w.z());
    const auto it = bins_.find(binKey(dirBin(z_rel), iz));
    if (it == bins_.end()) continue;
    for (const auto& [ix, iy] : it->second) {
      const Eigen::Vector2d rel = params_.ee_voxel * Eigen::Vector2d(ix, iy);
      const Eigen::Vector2d base = P.translation.head<2>() - Rz * rel;
      cells.insert(cellOf(base));
    }
  }
  return {cells.begin(), cells.end()};
}

std::vector<Eigen::Vector2d> InverseReachabilityMap::basePositions(const RigidPose& P) const {
  std::vector<Eigen::Vector2d> out;
  for (int64_t key : baseCells(P)) out.push_back(cellCenter(key));
  return out;
}

void InverseReachabilityMap::saveCache(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  const uint32_t magic = 0x4d524931;  // "IRM1"
  os.write(reinterpret_cast<const char*>(&magic), 4);
  os.write(reinterpret_cast<const char*>(&desc_hash_), 8);
  os.write(reinterpret_cast<const char*>(&params_), sizeof(IrmParams));
  const uint64_t n = bins_.size();
  os.write(reinterpret_cast<const char*>(&n), 8);
  for (const auto& [key, offs] : bins_) {
    os.write(reinterpret_cast<const char*>(&key), 4);
    const uint32_t m = static_cast<uint32_t>(offs.size());
    os.write(reinterpret_cast<const char*>(&m), 4);
    os.write(reinterpret_cast<const char*>(offs.data()), m * sizeof(offs[0]));
  }
}

std::optional<InverseReachabilityMap> InverseReachabilityMap::loadCache(
    const std::string& path, const RobotDescription& desc, const IrmParams& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  uint32_t magic = 0;
  is.read(reinterpret_cast<char*>(&magic), 4);
  if (magic != 0x4d524931) return std::nullopt;
  InverseReachabilityMap irm;
  is.read(reinterpret_cast<char*>(&irm.desc_hash_), 8);
  is.read(reinterpret_cast<char*>(&irm.params_), sizeof(IrmParams));
  if (irm.desc_hash_ != desc.contentHash() || !(irm.params_ == params)) return std::nullopt;
  uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), 8);
  for (uint64_t i = 0; i < n; ++i) {
    uint32_t key = 0, m = 0;
    is.read(reinterpret_cast<char*>(&key), 4);
    is.read(reinterpret_cast<char*>(&m), 4);
    std::vector<std::pair<int16_t, int16_t>> offs(m);
    is.read(reinterpret_cast<char*>(offs.data()), m * sizeof(offs[0]));
    irm.bins_[key] = std::move(offs);
  }
  if (!is) return std::nullopt;
  return irm;
}

Ellipse2 fitCoverageEllipse(const std::vector<Eigen::Vector2d>& cells, double coverage,
                            double min_semi_axis) {
  if (cells.empty()) throw std::invalid_argument("fitCoverageEllipse: no cells");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& c : cells) mean += c;
  mean /= static_cast<double>(cells.size());

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& c : cells) cov += (c - mean) * (c - mean).transpose();
  cov /= static_cast<double>(cells.size());

  // principal axis first, proper rotation (eigenvalues come out ascending)
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Eigen::Matrix2d R;
  R.col(0) = eig.eigenvectors().col(1);
  R.col(1) = eig.eigenvectors().col(0);
  if (R.determinant() < 0.0) R.col(1) = -R.col(1);
  const double ra = std::max(std::sqrt(std::max(eig.eigenvalues()[1], 0.0)), 1e-6);
  const double rb = std::max(std::sqrt(std::max(eig.eigenvalues()[0], 0.0)), 1e-6);

  std::vector<double> radii;
  radii.reserve(cells.size());
  for (const auto& c : cells) {
    const Eigen::Vector2d q = R.transpose() * (c - mean);
    radii.push_back(std::hypot(q.x() / ra, q.y() / rb));
  }
  std::sort(radii.begin(), radii.end());
  const size_t idx = std::min(cells.size() - 1,
                              static_cast<size_t>(std::ceil(coverage * cells.size())) - 1);
  const double scale = std::max(radii[idx], 1e-9) * (1.0 + 1e-9);

  const double a = std::max(scale * ra, min_semi_axis);
  const double b = std::max(scale * rb, min_semi_axis);
  return Ellipse2(mean, R, a, std::min(b, a));
}

}  // namespace mmk
