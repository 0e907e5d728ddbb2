#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace mmk {

// M-segment polynomial trajectory of degree 2s-1 (s = 3, minimum jerk) in the
// generalized configuration q in R^dim. Segment i covers local time
// [0, T_i]; coefficient blocks are 6 x dim, rows are powers t^0..t^5.
class PiecewiseTrajectory {
 public:
  static constexpr int kOrderS = 3;
  static constexpr int kCoeffs = 2 * kOrderS;

  PiecewiseTrajectory() = default;
  PiecewiseTrajectory(std::vector<Eigen::MatrixXd> coeffs, Eigen::VectorXd durations);

  int dim() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_[0].cols()); }
  int segments() const { return static_cast<int>(coeffs_.size()); }
  double totalDuration() const { return cumulative_.size() ? cumulative_[segments()] : 0.0; }
  const Eigen::VectorXd& durations() const { return durations_; }
  double junctionTime(int i) const { return cumulative_[i]; }  // \bar t_i, i in [0, M]
  const Eigen::MatrixXd& coeffBlock(int i) const { return coeffs_[i]; }

  // derivative of order k at global time t; exact junction times evaluate on
  // the right segment (left at t = \bar t_M). k >= 2s gives zero.
  Eigen::VectorXd eval(double t, int k = 0) const;
  Eigen::VectorXd evalLocal(int segment, double u, int k) const;

  // segment containing t under the junction convention above
  int segmentOf(double t, double* local = nullptr) const;

  // optimizable perception window per task index
  std::map<int, double> perception_durations;

  std::string serialize() const;
  static PiecewiseTrajectory parse(const std::string& text);

 private:
  std::vector<Eigen::MatrixXd> coeffs_;
  Eigen::VectorXd durations_;
  std::vector<double> cumulative_;
};

// basis beta^{(k)}(u) for degree-5 polynomials
Eigen::Matrix<double, 6, 1> polyBasis(double u, int k);

}  // namespace mmk
