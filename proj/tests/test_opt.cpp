#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmk/opt/alm.hpp"
#include "mmk/opt/lbfgs.hpp"

using namespace mmk;

TEST_CASE("lbfgs on rosenbrock") {
  Objective rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0, b = 100.0;
    const double f = (a - x[0]) * (a - x[0]) + b * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]);
    g[0] = -2.0 * (a - x[0]) - 4.0 * b * x[0] * (x[1] - x[0] * x[0]);
    g[1] = 2.0 * b * (x[1] - x[0] * x[0]);
    return f;
  };
  Eigen::VectorXd x = Eigen::Vector2d(-1.2, 1.0);
  LbfgsOptions opts;
  opts.max_iterations = 500;
  opts.g_epsilon = 1e-8;
  const auto res = lbfgsMinimize(rosen, x, opts);
  CHECK(res.converged);
  CHECK((x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-6);
}

TEST_CASE("box lbfgs stays feasible and finds the constrained optimum") {
  Objective quad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * (x - Eigen::Vector2d(2.0, -3.0));
    return (x - Eigen::Vector2d(2.0, -3.0)).squaredNorm();
  };
  Eigen::VectorXd x = Eigen::Vector2d(0.0, 0.0);
  const Eigen::VectorXd lo = Eigen::Vector2d(-1.0, -1.0), hi = Eigen::Vector2d(1.0, 1.0);
  const auto res = boxLbfgsMinimize(quad, x, lo, hi);
  CHECK(res.converged);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-8));
}

namespace {

// min x^2 subject to x >= 1
class ToyIneq : public ConstrainedProblem {
 public:
  int dim() const override { return 1; }
  int eqCount() const override { return 0; }
  int ineqCount() const override { return 1; }
  double evalAugmented(const Eigen::VectorXd& x, const AlmState& alm, Eigen::VectorXd&,
                       Eigen::VectorXd& g, Eigen::VectorXd& grad) override {
    const double f = x[0] * x[0];
    g[0] = 1.0 - x[0];
    grad[0] = 2.0 * x[0];
    grad[0] += alm.sigmaIneq(0, g[0]) * (-1.0);
    return f + alm.valueIneq(0, g[0], 1.0);
  }
};

// min x^2 + y^2 subject to x + y = 1
class ToyEq : public ConstrainedProblem {
 public:
  int dim() const override { return 2; }
  int eqCount() const override { return 1; }
  int ineqCount() const override { return 0; }
  double evalAugmented(const Eigen::VectorXd& x, const AlmState& alm, Eigen::VectorXd& h,
                       Eigen::VectorXd&, Eigen::VectorXd& grad) override {
    const double f = x.squaredNorm();
    h[0] = x[0] + x[1] - 1.0;
    grad = 2.0 * x;
    grad.array() += alm.sigmaEq(0, h[0]);
    return f + alm.valueEq(0, h[0], 1.0);
  }
};

}  // namespace

TEST_CASE("alm solves the 1-d inequality toy to kkt") {
  ToyIneq p;
  Eigen::VectorXd x(1);
  x[0] = -2.0;
  AlmOptions opts;
  opts.eps_cons = 1e-6;
  opts.eps_grad = 1e-7;
  const auto rep = almSolve(p, x, opts);
  CHECK(rep.feasible);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("alm solves the equality toy") {
  ToyEq p;
  Eigen::VectorXd x = Eigen::Vector2d(3.0, -5.0);
  AlmOptions opts;
  opts.eps_cons = 1e-8;
  opts.eps_grad = 1e-8;
  const auto rep = almSolve(p, x, opts);
  CHECK(rep.feasible);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(rep.max_violation <= 1e-8);
}
