#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace scfa {

struct BoxBfgsOptions {
  int max_iters = 200;
  double grad_tol = 1e-7;  // max-norm of the projected gradient
  int max_backtracks = 50;
};

struct BoxBfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double last_decrease = 0.0;
  double projected_grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Zero the gradient components that point outward from an active bound.
inline Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                          const Eigen::VectorXd& lo,
                                          const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace detail

/// Minimizes a smooth function over the box [lo, hi] with a projected BFGS
/// iteration: the inverse-Hessian model acts on the free variables only,
/// steps are projected back into the box, and an Armijo backtracking search
/// along the projected path accepts the step.
///
/// `fg(x, grad)` must return f(x) and write the gradient into `grad`.
/// Convergence is declared when the projected gradient falls below
/// `grad_tol`, or when no step along the steepest projected direction
/// decreases f any more (the numerical floor of the objective).
template <class Objective>
BoxBfgsResult minimize_box_bfgs(Objective&& fg, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                const BoxBfgsOptions& opts = {}) {
  const Eigen::Index n = x0.size();
  BoxBfgsResult res;
  Eigen::VectorXd x = detail::project(x0, lo, hi);
  Eigen::VectorXd g(n);
  double f = fg(x, g);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;

  Eigen::VectorXd xt(n), gt(n);
  for (int it = 0; it < opts.max_iters; ++it) {
    Eigen::VectorXd pg = detail::projected_gradient(x, g, lo, hi);
    res.projected_grad_norm = pg.lpNorm<Eigen::Infinity>();
    if (res.projected_grad_norm < opts.grad_tol) {
      res.converged = true;
      break;
    }
    res.iterations = it + 1;

    // Free variables: not pinned at a bound by an outward gradient.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pg[i] == 0.0) continue;
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (pg[j] != 0.0) acc += H(i, j) * g[j];
      d[i] = -acc;
    }
    if (g.dot(d) >= -1e-14 * g.norm() * d.norm() || !d.allFinite()) {
      H.setIdentity();
      fresh = true;
      d = -pg;
    }

    bool accepted = false;
    double ft = f;
    for (;;) {
      double t = 1.0;
      for (int b = 0; b < opts.max_backtracks; ++b, t *= 0.5) {
        xt = detail::project(x + t * d, lo, hi);
        const Eigen::VectorXd s = xt - x;
        if (s.lpNorm<Eigen::Infinity>() == 0.0) break;
        ft = fg(xt, gt);
        if (std::isfinite(ft) && ft <= f + 1e-4 * g.dot(s)) {
          accepted = true;
          break;
        }
      }
      if (accepted || fresh) break;
      H.setIdentity();
      fresh = true;
      d = -pg;
    }
    if (!accepted) {
      // f cannot be decreased along the projected steepest-descent path.
      res.converged = true;
      res.last_decrease = 0.0;
      break;
    }

    const Eigen::VectorXd s = xt - x;
    const Eigen::VectorXd y = gt - g;
    const double sy = s.dot(y);
    res.last_decrease = f - ft;
    x = xt;
    g = gt;
    f = ft;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
      fresh = false;
    }
  }
  if (!res.converged) {
    const Eigen::VectorXd pg = detail::projected_gradient(x, g, lo, hi);
    res.projected_grad_norm = pg.lpNorm<Eigen::Infinity>();
    res.converged = res.projected_grad_norm < opts.grad_tol;
  }
  res.x = x;
  res.value = f;
  return res;
}

}  // namespace scfa
