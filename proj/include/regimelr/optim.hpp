#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>

namespace regimelr {

struct LocalOptResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

// BFGS minimization with Armijo backtracking. `f` has the signature
// double(const VectorXd& x, VectorXd* grad); grad is always requested.
// Stops when the gradient or successive objective change falls below tol.
template <typename F>
LocalOptResult bfgs_minimize(F&& f, const Eigen::VectorXd& x0, double tol,
                             int max_iterations) {
  const int n = static_cast<int>(x0.size());
  LocalOptResult res;
  res.x = x0;
  Eigen::VectorXd grad(n);
  double fx = f(res.x, &grad);
  ++res.evaluations;
  res.value = fx;

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x_new(n), grad_new(n);
  for (int it = 0; it < max_iterations; ++it) {
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= tol * std::max(1.0, std::abs(fx))) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -h * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // reset to steepest descent
      h.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
    }

    double step = 1.0;
    double f_new = fx;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * dir;
      f_new = f(x_new, &grad_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      res.converged = true;  // no descent possible at machine resolution
      break;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
      h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    const double drop = fx - f_new;
    res.x = x_new;
    fx = f_new;
    grad = grad_new;
    res.value = fx;
    if (drop <= tol * std::max(1.0, std::abs(fx))) {
      res.converged = true;
      break;
    }
  }
  res.value = fx;
  return res;
}

// Nelder-Mead minimization. `f` maps VectorXd -> double and may return
// +infinity for infeasible points. `step` sets the initial simplex spread
// per coordinate. Converges when the simplex infinity-norm diameter falls
// below tol_x; otherwise stops at max_evaluations.
template <typename F>
LocalOptResult nelder_mead_minimize(F&& f, const Eigen::VectorXd& x0,
                                    const Eigen::VectorXd& step, double tol_x,
                                    int max_evaluations) {
  const int n = static_cast<int>(x0.size());
  const int m = n + 1;
  std::vector<Eigen::VectorXd> xs(m, x0);
  std::vector<double> fs(m);
  LocalOptResult res;
  fs[0] = f(xs[0]);
  ++res.evaluations;
  for (int i = 0; i < n; ++i) {
    xs[i + 1](i) += step(i);
    fs[i + 1] = f(xs[i + 1]);
    ++res.evaluations;
  }

  auto order = [&] {
    for (int i = 1; i < m; ++i) {  // insertion sort, m is small
      Eigen::VectorXd x = xs[i];
      double fx = fs[i];
      int j = i - 1;
      while (j >= 0 && fs[j] > fx) {
        xs[j + 1] = xs[j];
        fs[j + 1] = fs[j];
        --j;
      }
      xs[j + 1] = std::move(x);
      fs[j + 1] = fx;
    }
  };
  auto diameter = [&] {
    double d = 0.0;
    for (int i = 1; i < m; ++i)
      d = std::max(d, (xs[i] - xs[0]).lpNorm<Eigen::Infinity>());
    return d;
  };

  order();
  while (res.evaluations < max_evaluations) {
    if (diameter() < tol_x) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[n]);
    const double fr = f(xr);
    ++res.evaluations;
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[n]);
      const double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else {
      const bool outside = fr < fs[n];
      const Eigen::VectorXd xc =
          outside ? (centroid + 0.5 * (centroid - xs[n])).eval()
                  : (centroid - 0.5 * (centroid - xs[n])).eval();
      const double fc = f(xc);
      ++res.evaluations;
      if (fc < (outside ? fr : fs[n])) {
        xs[n] = xc;
        fs[n] = fc;
      } else {  // shrink toward the best vertex
        for (int i = 1; i < m; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = f(xs[i]);
          ++res.evaluations;
        }
      }
    }
    order();
  }
  res.x = xs[0];
  res.value = fs[0];
  return res;
}

}  // namespace regimelr
