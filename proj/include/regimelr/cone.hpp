#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

namespace regimelr {

// A point of the non-convex cone of rank-one PSD symmetric matrices,
// carried as the generating vector omega and its image
// v(omega) = (omega_1^2,...,omega_q^2, omega_1 omega_2,...,
// omega_{q-1} omega_q).
struct ConePoint {
  Eigen::VectorXd omega;
  Eigen::VectorXd image;
};

struct ConeConfig {
  int random_restarts = 8;
  double tol = 1e-10;
  int max_iterations = 500;
  // Fixed documented seed so restart draws are identical on every call,
  // keeping results independent of the execution schedule.
  std::uint64_t restart_seed = 0x5eedc01dULL;
};

// v(omega): squares first, then off-diagonal products row-major.
Eigen::VectorXd vee(const Eigen::VectorXd& omega);

// Symmetric q2 x q2 matrix whose diagonal holds the first q2 entries of z
// and whose off-diagonals hold the remaining entries (row-major order).
Eigen::MatrixXd vartheta_to_sym(const Eigen::VectorXd& z, int q2);

// min over omega in R^q2 of (v(omega) - z)' W (v(omega) - z): multi-start
// local search initialized at the top eigenpair of the symmetrized matrix of
// z plus seeded random restarts. Returns the infimum (>= 0; never above
// z'Wz since omega = 0 is feasible) and the canonicalized argmin
// (first entry >= 0).
std::pair<double, ConePoint> cone_infimum(const Eigen::VectorXd& z,
                                          const Eigen::MatrixXd& weight,
                                          int q2,
                                          const ConeConfig& config = {});

}  // namespace regimelr
