#include "regimelr/ar_process.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "regimelr/rng.hpp"

namespace regimelr {

namespace {

Eigen::MatrixXd companion(const Eigen::VectorXd& coeffs) {
  const int p = static_cast<int>(coeffs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  a.row(0) = coeffs.transpose();
  if (p > 1) a.bottomLeftCorner(p - 1, p - 1).setIdentity();
  return a;
}

}  // namespace

bool check_stationarity(const Eigen::VectorXd& coeffs) {
  const int p = static_cast<int>(coeffs.size());
  if (p == 0) return true;
  if (!coeffs.allFinite()) return false;
  // Roots z of the lag polynomial are reciprocals of companion eigenvalues,
  // so |z| > 1 + tol for every root <=> max |eigenvalue| * (1 + tol) < 1.
  const Eigen::VectorXcd ev = companion(coeffs).eigenvalues();
  const double rho = ev.cwiseAbs().maxCoeff();
  return rho * (1.0 + kRootTol) < 1.0;
}

StationaryMoments ar_moments(const ArParams& params) {
  if (!(params.sigma2 > 0.0))
    throw std::invalid_argument("sigma2 must be positive");
  if (!check_stationarity(params.coeffs))
    throw std::invalid_argument("nonstationary");
  const int p = params.p();

  StationaryMoments mom;
  mom.mean = params.intercept / (1.0 - params.coeffs.sum());
  if (p == 0) return mom;

  // Stationary covariance S of p consecutive values solves S = A S A' + Q
  // with A the companion matrix and Q = sigma2 * e1 e1'. Solve the
  // vectorized p^2 x p^2 linear system.
  const Eigen::MatrixXd a = companion(params.coeffs);
  Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(p * p, p * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < p; ++k)
        for (int l = 0; l < p; ++l) sys(j * p + i, l * p + k) -= a(i, k) * a(j, l);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(p * p);
  q(0) = params.sigma2;
  const Eigen::VectorXd s = sys.partialPivLu().solve(q);

  // Average each diagonal to restore the exact Toeplitz structure.
  Eigen::VectorXd acov = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < p; ++k) {
    double sum = 0.0;
    for (int i = 0; i + k < p; ++i) sum += 0.5 * (s((i + k) * p + i) + s(i * p + i + k));
    acov(k) = sum / (p - k);
  }
  mom.gamma.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) mom.gamma(i, j) = acov(std::abs(i - j));

  mom.gamma_inv = gamma_inverse_toeplitz(params);

  const Eigen::LLT<Eigen::MatrixXd> llt(mom.gamma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("autocovariance matrix not positive definite");
  mom.log_det_gamma =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return mom;
}

Eigen::MatrixXd gamma_inverse_toeplitz(const ArParams& params) {
  if (!(params.sigma2 > 0.0))
    throw std::invalid_argument("sigma2 must be positive");
  if (!check_stationarity(params.coeffs))
    throw std::invalid_argument("nonstationary");
  const int p = params.p();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int i = j; i < p; ++i) {
      const int k = i - j;
      u(i, j) = (k == 0) ? 1.0 : -params.coeffs(k - 1);
      v(i, j) = params.coeffs(p - 1 - k);
    }
  }
  return (u.transpose() * u - v.transpose() * v) / params.sigma2;
}

Eigen::VectorXd simulate_ar(const ArParams& params, int length, int presample,
                            std::uint64_t seed) {
  if (length <= 0) throw std::invalid_argument("length must be positive");
  if (presample < 0) throw std::invalid_argument("presample must be >= 0");
  if (!(params.sigma2 > 0.0))
    throw std::invalid_argument("sigma2 must be positive");
  if (!check_stationarity(params.coeffs))
    throw std::invalid_argument("nonstationary");

  const int p = params.p();
  const double mean = params.intercept / (1.0 - params.coeffs.sum());
  const double sd = std::sqrt(params.sigma2);
  NormalRng rng(seed);

  // recent(k) holds y_{t-1-k}; initialized at the stationary mean.
  Eigen::VectorXd recent = Eigen::VectorXd::Constant(std::max(p, 1), mean);
  Eigen::VectorXd out(length + p);
  const int total = presample + length + p;
  for (int t = 0; t < total; ++t) {
    double y = params.intercept + sd * rng.normal();
    for (int k = 0; k < p; ++k) y += params.coeffs(k) * recent(k);
    for (int k = p - 1; k > 0; --k) recent(k) = recent(k - 1);
    if (p > 0) recent(0) = y;
    if (t >= presample) out(t - presample) = y;
  }
  return out;
}

}  // namespace regimelr
