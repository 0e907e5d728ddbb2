#include "mmk/robot/ik.hpp"

#include <random>

namespace mmk {

namespace {

// quick reject for targets outside the arm span
bool beyondReach(const RobotDescription& desc, const RigidPose& target,
                 const Eigen::Vector3d& base) {
  const RigidPose arm_base = fkBase(base) * desc.mount;
  const double d = (target.translation - arm_base.translation).norm();
  return d > desc.maxReach() + 1e-9;
}

}  // namespace

std::vector<Eigen::VectorXd> solveIk(const RobotDescription& desc, const RigidPose& target,
                                     const Eigen::Vector3d& base, const Eigen::VectorXd& seed,
                                     const IkOptions& opts) {
  const int L = desc.jointCount();
  std::vector<Eigen::VectorXd> solutions;
  if (!target.translation.allFinite()) return solutions;
  if (beyondReach(desc, target, base)) return solutions;

  std::mt19937_64 rng(opts.rng_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Eigen::VectorXd lo = desc.lowerLimits(), hi = desc.upperLimits();
  const int err_dim = opts.position_only ? 3 : 6;

  for (int restart = 0; restart < opts.restarts; ++restart) {
    Eigen::VectorXd q(L);
    if (restart == 0 && seed.size() == L) {
      q = seed;
    } else {
      for (int i = 0; i < L; ++i) q[i] = lo[i] + (hi[i] - lo[i]) * u01(rng);
    }
    WholeBodyState state(base, q);

    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      state.arm = q;
      const RigidPose ee = fkFrame(desc, state, FrameId::Ee);
      const Eigen::Vector3d pe = target.translation - ee.translation;
      Eigen::VectorXd e(err_dim);
      e.head<3>() = pe;
      double rot_err = 0.0;
      if (!opts.position_only) {
        const Eigen::Matrix3d Re = target.matrix() * ee.matrix().transpose();
        const Eigen::Vector3d w = logSO3(Re);
        e.tail<3>() = w;
        rot_err = w.norm();
      }
      if (pe.norm() < opts.pos_tol && rot_err < opts.rot_tol) {
        converged = true;
        break;
      }
      const Eigen::MatrixXd J = jacobianEe(desc, state).topRows(err_dim).rightCols(L);
      const Eigen::MatrixXd JJt =
          J * J.transpose() + opts.damping * opts.damping * Eigen::MatrixXd::Identity(err_dim, err_dim);
      Eigen::VectorXd dq = J.transpose() * JJt.ldlt().solve(e);
      const double step = std::min(1.0, 0.5 / std::max(1e-9, dq.cwiseAbs().maxCoeff()));
      q += step * dq;
      for (int i = 0; i < L; ++i) q[i] = std::clamp(q[i], lo[i], hi[i]);
    }
    if (!converged) continue;
    if (!desc.withinLimits(q)) continue;

    bool duplicate = false;
    for (const auto& s : solutions) {
      if ((s - q).cwiseAbs().maxCoeff() < 1e-3) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) solutions.push_back(q);
  }
  return solutions;
}

}  // namespace mmk
