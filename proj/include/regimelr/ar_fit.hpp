#pragma once

#include <Eigen/Dense>

#include "regimelr/ar_process.hpp"

namespace regimelr {

// Null-model fit: OLS coefficients, ML innovation variance SSR/T, the
// maximized conditional log-likelihood and the standardized residuals.
struct ArFit {
  ArParams params;
  double loglik = 0.0;
  Eigen::VectorXd residuals_std;
  // OLS can land outside the stationary region in finite samples; that is
  // surfaced as a flag, not an error.
  bool stationary = true;
};

// Conditional Gaussian log-likelihood of `series` (p initial values followed
// by T observations): sum over t of log N(y_t; mean_t, sigma2) with
// mean_t = intercept + sum_i coeffs[i] y_{t-i}.
// Throws std::invalid_argument when sigma2 <= 0 or the series is shorter
// than p + 1.
double ar_conditional_loglik(const Eigen::VectorXd& series,
                             const ArParams& params);

// Exact conditional ML fit of an AR(p): OLS for intercept and coefficients,
// sigma2 = SSR/T, residuals_std = raw residual / sigma. Throws
// std::runtime_error("collinear lags") when the lag regression is rank
// deficient and std::invalid_argument on a too-short series.
ArFit fit_ar(const Eigen::VectorXd& series, int p);

}  // namespace regimelr
