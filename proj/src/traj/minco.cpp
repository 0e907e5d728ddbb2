#include "mmk/traj/minco.hpp"

#include <stdexcept>

namespace mmk {

void BandedSystem::create(int n, int lower, int upper) {
  n_ = n;
  lower_ = lower;
  upper_ = upper;
  data_.assign(static_cast<size_t>(lower + upper + 1) * n, 0.0);
}

void BandedSystem::factorizeLU() {
  for (int k = 0; k < n_ - 1; ++k) {
    const double piv = operator()(k, k);
    const int iM = std::min(k + lower_, n_ - 1);
    for (int i = k + 1; i <= iM; ++i) {
      if (operator()(i, k) == 0.0) continue;
      const double l = operator()(i, k) / piv;
      operator()(i, k) = l;
      const int jM = std::min(k + upper_, n_ - 1);
      for (int j = k + 1; j <= jM; ++j) operator()(i, j) -= l * operator()(k, j);
    }
  }
}

void BandedSystem::solve(Eigen::MatrixXd& b) const {
  // forward substitution with unit lower factor
  for (int k = 0; k < n_; ++k) {
    const int iM = std::min(k + lower_, n_ - 1);
    for (int i = k + 1; i <= iM; ++i) {
      const double l = operator()(i, k);
      if (l != 0.0) b.row(i) -= l * b.row(k);
    }
  }
  // back substitution with the upper factor
  for (int k = n_ - 1; k >= 0; --k) {
    b.row(k) /= operator()(k, k);
    const int im = std::max(0, k - upper_);
    for (int i = im; i < k; ++i) {
      const double u = operator()(i, k);
      if (u != 0.0) b.row(i) -= u * b.row(k);
    }
  }
}

void BandedSystem::solveAdj(Eigen::MatrixXd& b) const {
  // A^T = U^T L^T: U^T is lower triangular
  for (int k = 0; k < n_; ++k) {
    b.row(k) /= operator()(k, k);
    const int iM = std::min(k + upper_, n_ - 1);
    for (int i = k + 1; i <= iM; ++i) {
      const double u = operator()(k, i);
      if (u != 0.0) b.row(i) -= u * b.row(k);
    }
  }
  for (int k = n_ - 1; k >= 0; --k) {
    const int im = std::max(0, k - lower_);
    for (int i = im; i < k; ++i) {
      const double l = operator()(k, i);
      if (l != 0.0) b.row(i) -= l * b.row(k);
    }
  }
}

void MinJerkSpline::fit(const BoundaryCondition& start, const BoundaryCondition& end,
                        const Eigen::MatrixXd& waypoints, const Eigen::VectorXd& durations) {
  dim_ = static_cast<int>(start.pos.size());
  M_ = static_cast<int>(durations.size());
  if (M_ < 1) throw std::invalid_argument("MinJerkSpline: needs at least one segment");
  if (waypoints.rows() != M_ - 1 || (M_ > 1 && waypoints.cols() != dim_))
    throw std::invalid_argument("MinJerkSpline: waypoint shape mismatch");
  for (int i = 0; i < M_; ++i)
    if (!(durations[i] > 0.0)) throw std::invalid_argument("MinJerkSpline: non-positive duration");
  T_ = durations;

  const int n = 6 * M_;
  A_.create(n, 6, 6);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, dim_);

  A_(0, 0) = 1.0;
  A_(1, 1) = 1.0;
  A_(2, 2) = 2.0;
  b.row(0) = start.pos.transpose();
  b.row(1) = start.vel.transpose();
  b.row(2) = start.acc.transpose();

  for (int i = 0; i < M_ - 1; ++i) {
    const double t1 = T_[i], t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    const int r = 6 * i;
    // jerk and snap continuity first: keeps the diagonal nonzero for plain LU
    A_(r + 3, r + 3) = 6.0;
    A_(r + 3, r + 4) = 24.0 * t1;
    A_(r + 3, r + 5) = 60.0 * t2;
    A_(r + 3, r + 9) = -6.0;
    A_(r + 4, r + 4) = 24.0;
    A_(r + 4, r + 5) = 120.0 * t1;
    A_(r + 4, r + 10) = -24.0;
    A_(r + 5, r + 0) = 1.0;
    A_(r + 5, r + 1) = t1;
    A_(r + 5, r + 2) = t2;
    A_(r + 5, r + 3) = t3;
    A_(r + 5, r + 4) = t4;
    A_(r + 5, r + 5) = t5;
    A_(r + 6, r + 0) = 1.0;
    A_(r + 6, r + 1) = t1;
    A_(r + 6, r + 2) = t2;
    A_(r + 6, r + 3) = t3;
    A_(r + 6, r + 4) = t4;
    A_(r + 6, r + 5) = t5;
    A_(r + 6, r + 6) = -1.0;
    A_(r + 7, r + 1) = 1.0;
    A_(r + 7, r + 2) = 2.0 * t1;
    A_(r + 7, r + 3) = 3.0 * t2;
    A_(r + 7, r + 4) = 4.0 * t3;
    A_(r + 7, r + 5) = 5.0 * t4;
    A_(r + 7, r + 7) = -1.0;
    A_(r + 8, r + 2) = 2.0;
    A_(r + 8, r + 3) = 6.0 * t1;
    A_(r + 8, r + 4) = 12.0 * t2;
    A_(r + 8, r + 5) = 20.0 * t3;
    A_(r + 8, r + 8) = -2.0;
    b.row(r + 5) = waypoints.row(i);
  }

  const double t1 = T_[M_ - 1], t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
  const int r = 6 * M_ - 3;
  const int c = 6 * (M_ - 1);
  A_(r, c + 0) = 1.0;
  A_(r, c + 1) = t1;
  A_(r, c + 2) = t2;
  A_(r, c + 3) = t3;
  A_(r, c + 4) = t4;
  A_(r, c + 5) = t5;
  A_(r + 1, c + 1) = 1.0;
  A_(r + 1, c + 2) = 2.0 * t1;
  A_(r + 1, c + 3) = 3.0 * t2;
  A_(r + 1, c + 4) = 4.0 * t3;
  A_(r + 1, c + 5) = 5.0 * t4;
  A_(r + 2, c + 2) = 2.0;
  A_(r + 2, c + 3) = 6.0 * t1;
  A_(r + 2, c + 4) = 12.0 * t2;
  A_(r + 2, c + 5) = 20.0 * t3;
  b.row(r) = end.pos.transpose();
  b.row(r + 1) = end.vel.transpose();
  b.row(r + 2) = end.acc.transpose();

  A_.factorizeLU();
  A_.solve(b);
  coeffs_ = std::move(b);
}

PiecewiseTrajectory MinJerkSpline::trajectory() const {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(M_);
  for (int i = 0; i < M_; ++i) blocks.push_back(coeffs_.middleRows(6 * i, 6));
  return PiecewiseTrajectory(std::move(blocks), T_);
}

double MinJerkSpline::energy() const {
  double e = 0.0;
  for (int i = 0; i < M_; ++i) {
    const auto c3 = coeffs_.row(6 * i + 3), c4 = coeffs_.row(6 * i + 4), c5 = coeffs_.row(6 * i + 5);
    const double t1 = T_[i], t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    e += 36.0 * c3.squaredNorm() * t1 + 144.0 * c3.dot(c4) * t2 +
         (192.0 * c4.squaredNorm() + 240.0 * c3.dot(c5)) * t3 + 720.0 * c4.dot(c5) * t4 +
         720.0 * c5.squaredNorm() * t5;
  }
  return e;
}

void MinJerkSpline::energyGradients(Eigen::MatrixXd& dE_dC, Eigen::VectorXd& dE_dT) const {
  dE_dC = Eigen::MatrixXd::Zero(6 * M_, dim_);
  dE_dT = Eigen::VectorXd::Zero(M_);
  for (int i = 0; i < M_; ++i) {
    const auto c3 = coeffs_.row(6 * i + 3), c4 = coeffs_.row(6 * i + 4), c5 = coeffs_.row(6 * i + 5);
    const double t1 = T_[i], t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    dE_dC.row(6 * i + 3) = 72.0 * c3 * t1 + 144.0 * c4 * t2 + 240.0 * c5 * t3;
    dE_dC.row(6 * i + 4) = 144.0 * c3 * t2 + 384.0 * c4 * t3 + 720.0 * c5 * t4;
    dE_dC.row(6 * i + 5) = 240.0 * c3 * t3 + 720.0 * c4 * t4 + 1440.0 * c5 * t5;
    // d/dT of the energy integral with coefficients held fixed: ||jerk(T)||^2
    dE_dT[i] = 36.0 * c3.squaredNorm() + 288.0 * c3.dot(c4) * t1 +
               (576.0 * c4.squaredNorm() + 720.0 * c3.dot(c5)) * t2 + 2880.0 * c4.dot(c5) * t3 +
               3600.0 * c5.squaredNorm() * t4;
  }
}

SplineGradients MinJerkSpline::propagate(const Eigen::MatrixXd& dL_dC,
                                         const Eigen::VectorXd& dL_dT_direct) const {
  Eigen::MatrixXd G = dL_dC;
  A_.solveAdj(G);

  SplineGradients out;
  out.waypoints = Eigen::MatrixXd::Zero(std::max(0, M_ - 1), dim_);
  out.durations = dL_dT_direct;
  out.tail = Eigen::MatrixXd::Zero(3, dim_);

  for (int i = 0; i < M_ - 1; ++i) out.waypoints.row(i) = G.row(6 * i + 5);
  out.tail.row(0) = G.row(6 * M_ - 3);
  out.tail.row(1) = G.row(6 * M_ - 2);
  out.tail.row(2) = G.row(6 * M_ - 1);

  // dA/dT_i acts on the six junction rows (or the three tail rows)
  for (int i = 0; i < M_; ++i) {
    const auto block = coeffs_.middleRows(6 * i, 6);
    const double t = T_[i];
    const Eigen::VectorXd vel = block.transpose() * polyBasis(t, 1);
    const Eigen::VectorXd acc = block.transpose() * polyBasis(t, 2);
    const Eigen::VectorXd jer = block.transpose() * polyBasis(t, 3);
    const Eigen::VectorXd snp = block.transpose() * polyBasis(t, 4);
    const Eigen::VectorXd crk = block.transpose() * polyBasis(t, 5);
    double g = 0.0;
    if (i < M_ - 1) {
      const int r = 6 * i;
      g += G.row(r + 3).dot(snp);  // jerk continuity row
      g += G.row(r + 4).dot(crk);  // snap continuity row
      g += G.row(r + 5).dot(vel);  // waypoint position row
      g += G.row(r + 6).dot(vel);  // position continuity row
      g += G.row(r + 7).dot(acc);  // velocity continuity row
      g += G.row(r + 8).dot(jer);  // acceleration continuity row
    } else {
      const int r = 6 * M_ - 3;
      g += G.row(r).dot(vel);
      g += G.row(r + 1).dot(acc);
      g += G.row(r + 2).dot(jer);
    }
    out.durations[i] -= g;
  }
  return out;
}

}  // namespace mmk
