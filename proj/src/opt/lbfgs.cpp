#include "mmk/opt/lbfgs.hpp"

#include <deque>

namespace mmk {

namespace {

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

// two-loop recursion for r = H g
Eigen::VectorXd twoLoop(const std::deque<Pair>& mem, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return q;
}

// strong-Wolfe line search, bracketing + zoom
bool wolfeSearch(const Objective& f, const Eigen::VectorXd& x0, double f0,
                 const Eigen::VectorXd& g0, const Eigen::VectorXd& p, double& alpha,
                 Eigen::VectorXd& x_out, double& f_out, Eigen::VectorXd& g_out,
                 const LbfgsOptions& opts) {
  const double d0 = g0.dot(p);
  if (d0 >= 0.0) return false;
  const double c1 = opts.wolfe_c1, c2 = opts.wolfe_c2;

  auto phi = [&](double a, double& dphi) {
    x_out = x0 + a * p;
    f_out = f(x_out, g_out);
    dphi = g_out.dot(p);
    return f_out;
  };

  double a_prev = 0.0, f_prev = f0, d_prev = d0;
  double a = alpha;
  double a_lo = 0.0, a_hi = 0.0, f_lo = f0, d_lo = d0, f_hi = 0.0, d_hi = 0.0;
  bool bracketed = false;

  for (int it = 0; it < opts.max_linesearch && !bracketed; ++it) {
    double d;
    const double fv = phi(a, d);
    if (fv > f0 + c1 * a * d0 || (it > 0 && fv >= f_prev)) {
      a_lo = a_prev;
      f_lo = f_prev;
      d_lo = d_prev;
      a_hi = a;
      f_hi = fv;
      d_hi = d;
      bracketed = true;
      break;
    }
    if (std::abs(d) <= -c2 * d0) {
      alpha = a;
      return true;
    }
    if (d >= 0.0) {
      a_lo = a;
      f_lo = fv;
      d_lo = d;
      a_hi = a_prev;
      f_hi = f_prev;
      d_hi = d_prev;
      bracketed = true;
      break;
    }
    a_prev = a;
    f_prev = fv;
    d_prev = d;
    a *= 2.0;
    if (a > 1e12) return false;
  }
  if (!bracketed) return false;

  // zoom with safeguarded cubic interpolation
  for (int it = 0; it < opts.max_linesearch; ++it) {
    const double span = a_hi - a_lo;
    double trial;
    {
      const double d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi);
      const double disc = d1 * d1 - d_lo * d_hi;
      if (disc > 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), span);
        trial = a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / (d_hi - d_lo + 2.0 * d2);
      } else {
        trial = a_lo + 0.5 * span;
      }
      const double lo = a_lo + 0.1 * span, hi = a_lo + 0.9 * span;
      if (!(std::min(lo, hi) <= trial && trial <= std::max(lo, hi))) trial = a_lo + 0.5 * span;
    }
    a = trial;
    double d;
    const double fv = phi(a, d);
    if (fv > f0 + c1 * a * d0 || fv >= f_lo) {
      a_hi = a;
      f_hi = fv;
      d_hi = d;
    } else {
      if (std::abs(d) <= -c2 * d0) {
        alpha = a;
        return true;
      }
      if (d * (a_hi - a_lo) >= 0.0) {
        a_hi = a_lo;
        f_hi = f_lo;
        d_hi = d_lo;
      }
      a_lo = a;
      f_lo = fv;
      d_lo = d;
    }
    if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, std::abs(a_lo))) break;
  }
  // accept the best sufficient-decrease point even without curvature
  double d;
  const double fv = phi(a_lo, d);
  if (a_lo > 0.0 && fv < f0) {
    alpha = a_lo;
    return true;
  }
  return false;
}

}  // namespace

LbfgsResult lbfgsMinimize(const Objective& f, Eigen::VectorXd& x, const LbfgsOptions& opts) {
  LbfgsResult res;
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n), x_new(n), g_new(n);
  double fx = f(x, g);
  std::deque<Pair> mem;
  std::deque<double> past_f{fx};

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    res.grad_norm = g.cwiseAbs().maxCoeff();
    if (res.grad_norm <= opts.g_epsilon) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -twoLoop(mem, g);
    double alpha = mem.empty() ? std::min(1.0, 1.0 / std::max(1e-12, g.norm())) : 1.0;
    double f_new;
    if (!wolfeSearch(f, x, fx, g, p, alpha, x_new, f_new, g_new, opts)) {
      // retry once along steepest descent
      p = -g;
      alpha = 1.0 / std::max(1.0, g.norm());
      mem.clear();
      if (!wolfeSearch(f, x, fx, g, p, alpha, x_new, f_new, g_new, opts)) break;
    }
    Pair pr;
    pr.s = x_new - x;
    pr.y = g_new - g;
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-12 * pr.y.squaredNorm()) {
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    x = x_new;
    fx = f_new;
    g = g_new;

    past_f.push_back(fx);
    if (static_cast<int>(past_f.size()) > opts.past + 1) past_f.pop_front();
    if (static_cast<int>(past_f.size()) == opts.past + 1) {
      const double drop = past_f.front() - fx;
      if (drop >= 0.0 && drop <= opts.rel_f_epsilon * std::max(1.0, std::abs(fx))) {
        res.converged = true;
        res.grad_norm = g.cwiseAbs().maxCoeff();
        break;
      }
    }
  }
  res.f = fx;
  res.grad_norm = g.cwiseAbs().maxCoeff();
  return res;
}

LbfgsResult boxLbfgsMinimize(const Objective& f, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const LbfgsOptions& opts) {
  LbfgsResult res;
  const int n = static_cast<int>(x.size());
  auto project = [&](Eigen::VectorXd& v) {
    for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
  };
  project(x);
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  std::deque<Pair> mem;

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    // projected-gradient stationarity
    Eigen::VectorXd xp = x - g;
    project(xp);
    res.grad_norm = (xp - x).cwiseAbs().maxCoeff();
    if (res.grad_norm <= opts.g_epsilon) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -twoLoop(mem, g);
    if (p.dot(g) > -1e-12 * p.norm() * g.norm()) {
      p = -g;
      mem.clear();
    }
    // projected backtracking Armijo
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = fx;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_new = x + alpha * p;
      project(x_new);
      const Eigen::VectorXd step = x_new - x;
      if (step.cwiseAbs().maxCoeff() < 1e-16) break;
      f_new = f(x_new, g_new);
      if (f_new <= fx + opts.wolfe_c1 * g.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    Pair pr;
    pr.s = x_new - x;
    pr.y = g_new - g;
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-12 * pr.y.squaredNorm()) {
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  res.f = fx;
  return res;
}

}  // namespace mmk
