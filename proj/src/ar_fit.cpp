#include "regimelr/ar_fit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace regimelr {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;
}

double ar_conditional_loglik(const Eigen::VectorXd& series,
                             const ArParams& params) {
  if (!(params.sigma2 > 0.0))
    throw std::invalid_argument("sigma2 must be positive");
  const int p = params.p();
  const int t_count = static_cast<int>(series.size()) - p;
  if (t_count < 1) throw std::invalid_argument("series shorter than p + 1");

  const double inv_sigma2 = 1.0 / params.sigma2;
  double ssq = 0.0;
  for (int t = 0; t < t_count; ++t) {
    double mean = params.intercept;
    for (int k = 0; k < p; ++k) mean += params.coeffs(k) * series(p + t - 1 - k);
    const double r = series(p + t) - mean;
    ssq += r * r;
  }
  return -0.5 * t_count * (kLogTwoPi + std::log(params.sigma2)) -
         0.5 * ssq * inv_sigma2;
}

ArFit fit_ar(const Eigen::VectorXd& series, int p) {
  if (p < 1) throw std::invalid_argument("p must be >= 1");
  const int t_count = static_cast<int>(series.size()) - p;
  if (t_count <= p + 2) throw std::invalid_argument("series too short for fit");

  Eigen::MatrixXd x(t_count, p + 1);
  Eigen::VectorXd y(t_count);
  for (int t = 0; t < t_count; ++t) {
    x(t, 0) = 1.0;
    for (int k = 0; k < p; ++k) x(t, 1 + k) = series(p + t - 1 - k);
    y(t) = series(p + t);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p + 1) throw std::runtime_error("collinear lags");
  const Eigen::VectorXd coef = qr.solve(y);

  ArFit fit;
  fit.params.intercept = coef(0);
  fit.params.coeffs = coef.segment(1, p);

  const Eigen::VectorXd resid = y - x * coef;
  fit.params.sigma2 = resid.squaredNorm() / t_count;
  fit.stationary = check_stationarity(fit.params.coeffs);

  if (fit.params.sigma2 > 0.0) {
    fit.residuals_std = resid / std::sqrt(fit.params.sigma2);
    fit.loglik = ar_conditional_loglik(series, fit.params);
  } else {
    // Noiseless data: the conditional likelihood is unbounded above.
    fit.residuals_std = Eigen::VectorXd::Zero(t_count);
    fit.loglik = std::numeric_limits<double>::infinity();
  }
  return fit;
}

}  // namespace regimelr
