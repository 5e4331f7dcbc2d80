#pragma once

// Brute-force and finite-difference oracles shared by the test binaries.
// Everything here is deliberately slow and simple so it can stand as an
// independent check on the library's analytic code paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracles {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

// Central differences with per-coordinate steps h_i = scale * max(1, |x_i|).
// scale ~ cbrt(machine eps) balances truncation against cancellation.
inline Eigen::VectorXd numeric_gradient(const ScalarFn& f, const Eigen::VectorXd& x,
                                        double scale = 6.0e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = scale * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Symmetric second differences, step ~ eps^(1/4) per coordinate.
inline Eigen::MatrixXd numeric_hessian(const ScalarFn& f, const Eigen::VectorXd& x,
                                       double scale = 1.2e-4) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h(i) = scale * std::max(1.0, std::abs(x(i)));
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd xp = x;
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    xp(i) = x(i) + h(i);
    const double fp = f(xp);
    xp(i) = x(i) - h(i);
    const double fm = f(xp);
    xp(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      xp(i) = x(i) + h(i);
      xp(j) = x(j) + h(j);
      const double fpp = f(xp);
      xp(j) = x(j) - h(j);
      const double fpm = f(xp);
      xp(i) = x(i) - h(i);
      const double fmm = f(xp);
      xp(j) = x(j) + h(j);
      const double fmp = f(xp);
      xp(i) = x(i);
      xp(j) = x(j);
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
    }
  }
  return hess;
}

inline double chi_squared_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared(dof), x);
}

// Kolmogorov-Smirnov distance between an empirical sample and a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double c = cdf(sample[i]);
    d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - c));
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
  }
  return d;
}

// Levinson-Durbin map from partial autocorrelations in (-1,1) to AR
// coefficients; the image is exactly the stationary region, which makes
// this the clean way to draw random stationary models in tests.
inline Eigen::VectorXd pacf_to_ar(const Eigen::VectorXd& pacf) {
  const Eigen::Index p = pacf.size();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    if (std::abs(pacf(k)) >= 1.0) throw std::invalid_argument("pacf entries must lie in (-1,1)");
    Eigen::VectorXd next = a;
    next(k) = pacf(k);
    for (Eigen::Index j = 0; j < k; ++j) next(j) = a(j) - pacf(k) * a(k - 1 - j);
    a = next;
  }
  return a;
}

}  // namespace oracles
