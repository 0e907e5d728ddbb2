#include "mmk/traj/trajectory.hpp"

#include <sstream>
#include <stdexcept>

#include "mmk/io/text.hpp"

namespace mmk {

Eigen::Matrix<double, 6, 1> polyBasis(double u, int k) {
  Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
  if (k > 5) return b;
  double fact = 1.0;
  for (int i = 1; i <= k; ++i) fact *= i;
  double up = 1.0;
  for (int n = k; n < 6; ++n) {
    b[n] = fact * up;
    up *= u;
    // fact tracks n! / (n-k)! for the next power
    fact *= static_cast<double>(n + 1) / (n + 1 - k);
  }
  return b;
}

PiecewiseTrajectory::PiecewiseTrajectory(std::vector<Eigen::MatrixXd> coeffs,
                                         Eigen::VectorXd durations)
    : coeffs_(std::move(coeffs)), durations_(std::move(durations)) {
  if (coeffs_.size() != static_cast<size_t>(durations_.size()))
    throw std::invalid_argument("PiecewiseTrajectory: size mismatch");
  cumulative_.resize(coeffs_.size() + 1, 0.0);
  for (int i = 0; i < durations_.size(); ++i) {
    if (!(durations_[i] > 0.0)) throw std::invalid_argument("PiecewiseTrajectory: T_i must be > 0");
    cumulative_[i + 1] = cumulative_[i] + durations_[i];
  }
}

int PiecewiseTrajectory::segmentOf(double t, double* local) const {
  const double T = totalDuration();
  if (t < -1e-9 || t > T + 1e-9) throw std::out_of_range("PiecewiseTrajectory: t out of range");
  t = std::clamp(t, 0.0, T);
  int seg;
  if (t >= cumulative_[segments()]) {
    seg = segments() - 1;  // right endpoint evaluates on the last segment
  } else {
    seg = static_cast<int>(std::upper_bound(cumulative_.begin(), cumulative_.end(), t) -
                           cumulative_.begin()) -
          1;
    seg = std::clamp(seg, 0, segments() - 1);
  }
  if (local) *local = t - cumulative_[seg];
  return seg;
}

Eigen::VectorXd PiecewiseTrajectory::evalLocal(int segment, double u, int k) const {
  return coeffs_[segment].transpose() * polyBasis(u, k);
}

Eigen::VectorXd PiecewiseTrajectory::eval(double t, int k) const {
  double u = 0.0;
  const int seg = segmentOf(t, &u);
  return evalLocal(seg, u, k);
}

std::string PiecewiseTrajectory::serialize() const {
  std::ostringstream os;
  os << "mmk-traj 1\n[trajectory]\n";
  os << "s = " << kOrderS << "\n";
  os << "segments = " << segments() << "\n";
  os << "dim = " << dim() << "\n";
  os << "durations = " << io::fmtVec(durations_) << "\n";
  if (!perception_durations.empty()) {
    os << "[perception]\n";
    for (const auto& [task, tp] : perception_durations)
      os << task << " " << io::fmtNum(tp) << "\n";
  }
  for (int i = 0; i < segments(); ++i) {
    os << "[coeffs " << i << "]\n";
    for (int r = 0; r < kCoeffs; ++r) {
      Eigen::VectorXd row = coeffs_[i].row(r);
      os << io::fmtVec(row) << "\n";
    }
  }
  return os.str();
}

PiecewiseTrajectory PiecewiseTrajectory::parse(const std::string& text) {
  const io::Document doc = io::parseDocument(text, "mmk-traj");
  const auto& hdr = doc.require("trajectory");
  const int M = static_cast<int>(hdr.num("segments"));
  const int dim = static_cast<int>(hdr.num("dim"));
  if (static_cast<int>(hdr.num("s")) != kOrderS)
    throw std::runtime_error("trajectory record: unsupported order");
  const auto dur = hdr.nums("durations");
  if (static_cast<int>(dur.size()) != M) throw std::runtime_error("trajectory record: bad durations");
  Eigen::VectorXd T(M);
  for (int i = 0; i < M; ++i) T[i] = dur[i];

  std::vector<Eigen::MatrixXd> coeffs;
  for (int i = 0; i < M; ++i) {
    const auto* sec = doc.find("coeffs " + std::to_string(i));
    if (!sec || static_cast<int>(sec->rows.size()) != kCoeffs)
      throw std::runtime_error("trajectory record: missing coeff block");
    Eigen::MatrixXd C(kCoeffs, dim);
    for (int r = 0; r < kCoeffs; ++r) {
      const auto v = io::parseNums(sec->rows[r]);
      if (static_cast<int>(v.size()) != dim)
        throw std::runtime_error("trajectory record: bad coeff row");
      for (int c = 0; c < dim; ++c) C(r, c) = v[c];
    }
    coeffs.push_back(C);
  }
  PiecewiseTrajectory traj(std::move(coeffs), T);
  if (const auto* p = doc.find("perception")) {
    for (const auto& row : p->rows) {
      const auto v = io::parseNums(row);
      if (v.size() != 2) throw std::runtime_error("trajectory record: bad perception row");
      traj.perception_durations[static_cast<int>(v[0])] = v[1];
    }
  }
  return traj;
}

}  // namespace mmk
