#pragma once

#include <map>
#include <string>

#include "mmk/opt/lbfgs.hpp"

namespace mmk {

// Multipliers and penalty weight of the Powell-Hestenes-Rockafellar loop.
struct AlmState {
  Eigen::VectorXd lambda;  // equality multipliers
  Eigen::VectorXd mu;      // inequality multipliers, >= 0
  double rho = 1.0;

  // penalty-gradient scale factors: dL/dx accumulates sigma_j * grad(c_j)
  double sigmaEq(int j, double h) const { return lambda[j] + rho * h; }
  double sigmaIneq(int j, double g) const { return std::max(0.0, mu[j] + rho * g); }
  // value contribution of one constraint (weight w applied outside multiplier updates)
  double valueEq(int j, double h, double w) const { return w * (lambda[j] * h + 0.5 * rho * h * h); }
  double valueIneq(int j, double g, double w) const {
    const double m = std::max(0.0, mu[j] + rho * g);
    return w * (m * m - mu[j] * mu[j]) / (2.0 * rho);
  }
};

// A smooth constrained problem in fused-evaluation form: one pass computes the
// cost, every constraint value, and the gradient of the full augmented
// Lagrangian (with the per-constraint sigma factors from AlmState applied to
// weighted constraint gradients).
class ConstrainedProblem {
 public:
  virtual ~ConstrainedProblem() = default;
  virtual int dim() const = 0;
  virtual int eqCount() const = 0;
  virtual int ineqCount() const = 0;
  // fixed per-constraint weights (violation-integral scaling), defaults to 1
  virtual void constraintWeights(Eigen::VectorXd& w_eq, Eigen::VectorXd& w_ineq) const;
  virtual double evalAugmented(const Eigen::VectorXd& x, const AlmState& alm, Eigen::VectorXd& h,
                               Eigen::VectorXd& g, Eigen::VectorXd& grad_aug) = 0;
  // per-coordinate scale applied by the solver (variable preconditioning);
  // the inner first-order norm is measured in this metric
  virtual Eigen::VectorXd preconditioner(const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Ones(x.size());
  }
  // optional labels for per-kind violation reporting
  virtual std::string eqKind(int) const { return "eq"; }
  virtual std::string ineqKind(int) const { return "ineq"; }
};

struct AlmOptions {
  double rho_init = 1.0;
  double rho_max = 300.0;
  double gamma = 4.0;           // penalty growth on insufficient decrease
  double decrease_ratio = 0.75; // "sufficient" violation decrease factor
  double eps_cons = 1e-3;       // max violation stop, native units
  double eps_grad = 1e-4;       // inner first-order stop at the last round
  int max_outer = 30;
  LbfgsOptions inner{.memory = 16, .max_iterations = 800, .rel_f_epsilon = 1e-11, .past = 5};
};

struct AlmReport {
  bool feasible = false;
  double max_violation = 0.0;
  double cost = 0.0;            // augmented cost at exit
  double inner_grad_norm = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double wall_seconds = 0.0;
  std::map<std::string, double> violation_by_kind;

  std::string summary() const;
};

AlmReport almSolve(ConstrainedProblem& problem, Eigen::VectorXd& x, const AlmOptions& opts = {});

}  // namespace mmk
