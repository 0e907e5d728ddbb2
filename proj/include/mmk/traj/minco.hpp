#pragma once

#include "mmk/traj/trajectory.hpp"

namespace mmk {

// Endpoint position with derivatives up to order s-1.
struct BoundaryCondition {
  Eigen::VectorXd pos, vel, acc;

  static BoundaryCondition rest(const Eigen::VectorXd& p) {
    return {p, Eigen::VectorXd::Zero(p.size()), Eigen::VectorXd::Zero(p.size())};
  }
};

// LU-factorizable banded matrix, no pivoting; the minimum-effort spline
// system below is ordered so the factorization is stable.
class BandedSystem {
 public:
  void create(int n, int lower, int upper);
  double& operator()(int i, int j) { return data_[(i - j + upper_) * n_ + j]; }
  double operator()(int i, int j) const { return data_[(i - j + upper_) * n_ + j]; }
  void factorizeLU();
  void solve(Eigen::MatrixXd& b) const;     // A x = b, in place
  void solveAdj(Eigen::MatrixXd& b) const;  // A^T x = b, in place

 private:
  int n_ = 0, lower_ = 0, upper_ = 0;
  std::vector<double> data_;
};

// Gradients of some loss with respect to the spline decision variables.
struct SplineGradients {
  Eigen::MatrixXd waypoints;  // (M-1) x dim
  Eigen::VectorXd durations;  // M
  Eigen::MatrixXd tail;       // 3 x dim: d/d(qf pos, vel, acc)
};

// Unique degree-5 spline interpolating the waypoints at segment junctions
// that minimizes \int ||q^(3)||^2, with continuity up to order 4 and the
// given boundary conditions. Construction and gradient propagation are
// linear in the segment count through the banded system.
class MinJerkSpline {
 public:
  void fit(const BoundaryCondition& start, const BoundaryCondition& end,
           const Eigen::MatrixXd& waypoints,  // (M-1) x dim
           const Eigen::VectorXd& durations);

  PiecewiseTrajectory trajectory() const;
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }  // 6M x dim
  int segments() const { return M_; }
  int dim() const { return dim_; }
  const Eigen::VectorXd& durations() const { return T_; }

  // control-effort integral and its direct gradients
  double energy() const;
  void energyGradients(Eigen::MatrixXd& dE_dC, Eigen::VectorXd& dE_dT) const;

  // chain rule from (dL/dC, direct dL/dT) to the decision variables via the
  // adjoint of the banded system
  SplineGradients propagate(const Eigen::MatrixXd& dL_dC, const Eigen::VectorXd& dL_dT_direct) const;

 private:
  int M_ = 0, dim_ = 0;
  Eigen::VectorXd T_;
  Eigen::MatrixXd coeffs_;  // 6M x dim
  BandedSystem A_;
};

}  // namespace mmk
