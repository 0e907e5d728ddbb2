#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace mmk {

// objective callback: value at x, gradient written to grad
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 300;
  double g_epsilon = 1e-6;        // ||g||_inf stop
  double rel_f_epsilon = 1e-12;   // relative decrease stop over the past window
  int past = 3;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_linesearch = 50;
};

struct LbfgsResult {
  double f = 0.0;
  double grad_norm = 0.0;  // ||g||_inf at exit
  int iterations = 0;
  bool converged = false;
};

// limited-memory quasi-Newton with a strong-Wolfe bracketing line search
LbfgsResult lbfgsMinimize(const Objective& f, Eigen::VectorXd& x, const LbfgsOptions& opts = {});

// box-constrained variant: L-BFGS directions with projected backtracking,
// convergence measured on the projected gradient
LbfgsResult boxLbfgsMinimize(const Objective& f, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const LbfgsOptions& opts = {});

}  // namespace mmk
