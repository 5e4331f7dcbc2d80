#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace regimelr {

// Tolerance on |root| - 1 when classifying the lag polynomial's roots.
inline constexpr double kRootTol = 1e-10;

// Linear Gaussian AR(p): y_t = intercept + sum_i coeffs[i] y_{t-i} + e_t,
// e_t ~ N(0, sigma2).
struct ArParams {
  double intercept = 0.0;
  Eigen::VectorXd coeffs;
  double sigma2 = 1.0;

  int p() const { return static_cast<int>(coeffs.size()); }
};

// Stationary mean and the p x p Toeplitz autocovariance matrix of p
// consecutive observations, with its inverse and log determinant.
struct StationaryMoments {
  double mean = 0.0;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd gamma_inv;
  double log_det_gamma = 0.0;
};

// True iff every root of 1 - sum_i coeffs[i] z^i has modulus > 1 + kRootTol.
// Decided via the companion-matrix eigenvalues (roots are their reciprocals).
bool check_stationarity(const Eigen::VectorXd& coeffs);

// Exact stationary moments. gamma solves the Yule-Walker system (via the
// discrete Lyapunov equation of the companion form); gamma_inv comes from
// gamma_inverse_toeplitz. Throws std::invalid_argument on nonstationary
// coefficients or sigma2 <= 0.
StationaryMoments ar_moments(const ArParams& params);

// Closed-form inverse autocovariance (U'U - V'V)/sigma2 with U, V the lower
// triangular Toeplitz matrices built from (1, -c_1, ..., -c_{p-1}) and
// (c_p, ..., c_1) respectively.
Eigen::MatrixXd gamma_inverse_toeplitz(const ArParams& params);

// Simulates p initial values plus `length` observations (total length + p)
// with standard-normal innovations from a seeded deterministic generator.
// The recursion starts at the stationary mean and discards the first
// `presample` draws.
Eigen::VectorXd simulate_ar(const ArParams& params, int length, int presample,
                            std::uint64_t seed);

}  // namespace regimelr
