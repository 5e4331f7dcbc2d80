#include "regimelr/cone.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "regimelr/optim.hpp"
#include "regimelr/rng.hpp"

namespace regimelr {

Eigen::VectorXd vee(const Eigen::VectorXd& omega) {
  const int q = static_cast<int>(omega.size());
  Eigen::VectorXd v(q * (q + 1) / 2);
  for (int i = 0; i < q; ++i) v(i) = omega(i) * omega(i);
  int pos = q;
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) v(pos++) = omega(i) * omega(j);
  return v;
}

Eigen::MatrixXd vartheta_to_sym(const Eigen::VectorXd& z, int q2) {
  if (z.size() != q2 * (q2 + 1) / 2)
    throw std::invalid_argument("z has wrong length for q2");
  Eigen::MatrixXd m(q2, q2);
  for (int i = 0; i < q2; ++i) m(i, i) = z(i);
  int pos = q2;
  for (int i = 0; i < q2; ++i)
    for (int j = i + 1; j < q2; ++j) {
      m(i, j) = z(pos);
      m(j, i) = z(pos);
      ++pos;
    }
  return m;
}

namespace {

// Jacobian of vee at omega, q2(q2+1)/2 x q2.
Eigen::MatrixXd vee_jacobian(const Eigen::VectorXd& omega) {
  const int q = static_cast<int>(omega.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(q * (q + 1) / 2, q);
  for (int i = 0; i < q; ++i) j(i, i) = 2.0 * omega(i);
  int pos = q;
  for (int i = 0; i < q; ++i)
    for (int k = i + 1; k < q; ++k) {
      j(pos, i) = omega(k);
      j(pos, k) = omega(i);
      ++pos;
    }
  return j;
}

}  // namespace

std::pair<double, ConePoint> cone_infimum(const Eigen::VectorXd& z,
                                          const Eigen::MatrixXd& weight,
                                          int q2, const ConeConfig& config) {
  const int q_vt = q2 * (q2 + 1) / 2;
  if (z.size() != q_vt) throw std::invalid_argument("z has wrong length");
  if (weight.rows() != q_vt || weight.cols() != q_vt)
    throw std::invalid_argument("weight has wrong shape");

  const auto objective = [&](const Eigen::VectorXd& omega,
                             Eigen::VectorXd* grad) {
    const Eigen::VectorXd r = vee(omega) - z;
    const Eigen::VectorXd wr = weight * r;
    if (grad) *grad = 2.0 * vee_jacobian(omega).transpose() * wr;
    return r.dot(wr);
  };

  // omega = 0 is always feasible and bounds the value by z'Wz.
  Eigen::VectorXd best_omega = Eigen::VectorXd::Zero(q2);
  double best_value = z.dot(weight * z);

  const auto try_start = [&](const Eigen::VectorXd& start) {
    const LocalOptResult res = bfgs_minimize(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
          return objective(x, g);
        },
        start, config.tol, config.max_iterations);
    if (!std::isfinite(res.value))
      throw std::runtime_error("cone optimizer produced non-finite value");
    if (res.value < best_value) {
      best_value = res.value;
      best_omega = res.x;
    }
  };

  // The symmetrized matrix of z: its top eigenpair gives the nearest
  // rank-one PSD matrix under the Frobenius norm, a near-exact start.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      vartheta_to_sym(z, q2));
  const double lambda_top = es.eigenvalues()(q2 - 1);
  if (lambda_top > 0.0) {
    const Eigen::VectorXd u = std::sqrt(lambda_top) * es.eigenvectors().col(q2 - 1);
    try_start(u);
    try_start(-u);
  }

  const double scale = std::sqrt(std::max(
      {std::abs(lambda_top), std::abs(es.eigenvalues()(0)), 1e-2}));
  NormalRng rng(config.restart_seed);
  for (int k = 0; k < config.random_restarts; ++k) {
    Eigen::VectorXd start(q2);
    for (int i = 0; i < q2; ++i) start(i) = scale * rng.normal();
    try_start(start);
  }

  if (best_value < 0.0) best_value = 0.0;
  if (best_omega(0) < 0.0) best_omega = -best_omega;
  return {best_value, ConePoint{best_omega, vee(best_omega)}};
}

}  // namespace regimelr
