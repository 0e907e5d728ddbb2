#include "mmk/opt/alm.hpp"

#include <chrono>
#include <sstream>

namespace mmk {

void ConstrainedProblem::constraintWeights(Eigen::VectorXd& w_eq, Eigen::VectorXd& w_ineq) const {
  w_eq = Eigen::VectorXd::Ones(eqCount());
  w_ineq = Eigen::VectorXd::Ones(ineqCount());
}

std::string AlmReport::summary() const {
  std::ostringstream os;
  os << (feasible ? "feasible" : "INFEASIBLE") << " max_viol=" << max_violation
     << " cost=" << cost << " outer=" << outer_iterations << " inner=" << inner_iterations
     << " wall=" << wall_seconds << "s";
  for (const auto& [kind, v] : violation_by_kind) os << " " << kind << "=" << v;
  return os.str();
}

AlmReport almSolve(ConstrainedProblem& problem, Eigen::VectorXd& x, const AlmOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  AlmState alm;
  alm.lambda = Eigen::VectorXd::Zero(problem.eqCount());
  alm.mu = Eigen::VectorXd::Zero(problem.ineqCount());
  alm.rho = opts.rho_init;

  Eigen::VectorXd h(problem.eqCount()), g(problem.ineqCount());
  AlmReport rep;
  double prev_viol = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    rep.outer_iterations = outer + 1;
    LbfgsOptions inner = opts.inner;
    // tolerance schedule: loose early rounds, eps_grad once nearly feasible
    inner.g_epsilon = std::max(opts.eps_grad, opts.eps_grad * std::pow(10.0, 2 - outer));

    const Eigen::VectorXd scale = problem.preconditioner(x);
    Eigen::VectorXd grad_full(problem.dim());
    Objective fused = [&](const Eigen::VectorXd& xs, Eigen::VectorXd& grad) {
      const Eigen::VectorXd xi = scale.cwiseProduct(xs);
      const double f = problem.evalAugmented(xi, alm, h, g, grad_full);
      grad = scale.cwiseProduct(grad_full);
      return f;
    };
    Eigen::VectorXd xs = x.cwiseQuotient(scale);
    const LbfgsResult res = lbfgsMinimize(fused, xs, inner);
    x = scale.cwiseProduct(xs);
    rep.inner_iterations += res.iterations;
    rep.inner_grad_norm = res.grad_norm;
    rep.cost = res.f;

    // refresh constraints at the final iterate
    Eigen::VectorXd dummy(problem.dim());
    problem.evalAugmented(x, alm, h, g, dummy);

    double viol = 0.0;
    rep.violation_by_kind.clear();
    for (int j = 0; j < h.size(); ++j) {
      const double v = std::abs(h[j]);
      viol = std::max(viol, v);
      auto& slot = rep.violation_by_kind[problem.eqKind(j)];
      slot = std::max(slot, v);
    }
    for (int j = 0; j < g.size(); ++j) {
      const double v = std::max(0.0, g[j]);
      viol = std::max(viol, v);
      auto& slot = rep.violation_by_kind[problem.ineqKind(j)];
      slot = std::max(slot, v);
    }
    rep.max_violation = viol;

    if (viol <= opts.eps_cons && res.grad_norm <= opts.eps_grad) {
      rep.feasible = true;
      break;
    }

    alm.lambda += alm.rho * h;
    for (int j = 0; j < g.size(); ++j) alm.mu[j] = std::max(0.0, alm.mu[j] + alm.rho * g[j]);
    if (viol > opts.decrease_ratio * prev_viol)
      alm.rho = std::min(alm.rho * opts.gamma, opts.rho_max);
    prev_viol = viol;
  }

  rep.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return rep;
}

}  // namespace mmk
