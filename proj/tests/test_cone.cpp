#include "doctest.h"
#include "oracles.hpp"
#include "regimelr/cone.hpp"
#include "regimelr/rng.hpp"

#include <cmath>
#include <utility>

using namespace regimelr;

namespace {

Eigen::MatrixXd random_spd(NormalRng& rng, int n, double ridge) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a.transpose() * a + ridge * Eigen::MatrixXd::Identity(n, n);
}

// Two-stage exhaustive search over omega in R^2.  The box radius comes from
// the feasibility bound: any omega with v(omega) further from z than the
// omega = 0 point cannot be optimal.
double grid_infimum_q2(const Eigen::VectorXd& z, const Eigen::MatrixXd& w) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
  const double zwz = z.dot(w * z);
  const double vbound = z.norm() + std::sqrt(zwz / es.eigenvalues().minCoeff());
  const double r = std::sqrt(std::sqrt(2.0) * vbound) + 0.05;

  const auto obj = [&](double a, double b) {
    Eigen::VectorXd v(3);
    v << a * a, b * b, a * b;
    const Eigen::VectorXd d = v - z;
    return d.dot(w * d);
  };

  // v(-omega) = v(omega), so the first coordinate can stay nonnegative.
  double best = zwz, best_a = 0.0, best_b = 0.0;
  const double coarse = 0.01;
  for (double a = 0.0; a <= r; a += coarse)
    for (double b = -r; b <= r; b += coarse) {
      const double val = obj(a, b);
      if (val < best) {
        best = val;
        best_a = a;
        best_b = b;
      }
    }
  const double fine = 5e-4;
  for (double a = best_a - 0.02; a <= best_a + 0.02; a += fine)
    for (double b = best_b - 0.02; b <= best_b + 0.02; b += fine)
      best = std::min(best, obj(a, b));
  return best;
}

}  // namespace

TEST_CASE("vee ordering and the symmetric-matrix inverse layout") {
  Eigen::VectorXd omega(3);
  omega << 2.0, -1.0, 3.0;
  const Eigen::VectorXd v = vee(omega);
  Eigen::VectorXd expect(6);
  expect << 4.0, 1.0, 9.0, -2.0, 6.0, -3.0;
  CHECK((v - expect).cwiseAbs().maxCoeff() == 0.0);

  // vartheta_to_sym(vee(omega)) reconstructs the rank-one matrix.
  const Eigen::MatrixXd m = vartheta_to_sym(v, 3);
  CHECK((m - omega * omega.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar case closed form") {
  NormalRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd z(1);
    z << 3.0 * rng.normal();
    Eigen::MatrixXd w(1, 1);
    w << 0.1 + 2.0 * rng.uniform();
    const auto [val, pt] = cone_infimum(z, w, 1);
    const double expect = z(0) >= 0.0 ? 0.0 : w(0, 0) * z(0) * z(0);
    CHECK(std::abs(val - expect) < 1e-10);
    CHECK(pt.omega(0) >= 0.0);
  }
}

TEST_CASE("points already in the cone give a zero infimum") {
  NormalRng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int q2 = 2 + trial % 3;
    Eigen::VectorXd omega(q2);
    for (int i = 0; i < q2; ++i) omega(i) = 2.0 * rng.normal();
    const Eigen::VectorXd z = vee(omega);
    const Eigen::MatrixXd w = random_spd(rng, q2 * (q2 + 1) / 2, 0.3);
    const auto [val, pt] = cone_infimum(z, w, q2);
    CHECK(val >= 0.0);
    CHECK(val < 1e-8 * std::max(1.0, z.dot(w * z)));
    CHECK((pt.image - vee(pt.omega)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pt.omega(0) >= 0.0);
  }
}

TEST_CASE("two-dimensional infimum matches the exhaustive grid") {
  NormalRng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd z(3);
    for (int i = 0; i < 3; ++i) z(i) = 1.5 * rng.normal();
    const Eigen::MatrixXd w = random_spd(rng, 3, 0.3);
    const auto [val, pt] = cone_infimum(z, w, 2);
    const double grid = grid_infimum_q2(z, w);
    // The grid value is an upper bound up to its resolution; the local
    // search must land within oracle tolerance of it.
    CHECK(val <= grid + 1e-8);
    CHECK(val >= grid - 1e-4);
    (void)pt;
  }
}

TEST_CASE("infimum scales quadratically with the point") {
  NormalRng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const int q2 = 2 + trial % 2;
    Eigen::VectorXd z(q2 * (q2 + 1) / 2);
    for (int i = 0; i < z.size(); ++i) z(i) = 2.0 * rng.normal();
    const Eigen::MatrixXd w = random_spd(rng, static_cast<int>(z.size()), 0.4);
    const double c = 0.3 + 2.0 * rng.uniform();
    const auto [base, p1] = cone_infimum(z, w, q2);
    const Eigen::VectorXd scaled_z = c * z;
    const auto [scaled, p2] = cone_infimum(scaled_z, w, q2);
    CHECK(scaled == doctest::Approx(c * c * base).epsilon(1e-6));
    (void)p1;
    (void)p2;
  }
}

TEST_CASE("infimum never exceeds the omega = 0 objective") {
  NormalRng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const int q2 = 1 + trial % 3;
    Eigen::VectorXd z(q2 * (q2 + 1) / 2);
    for (int i = 0; i < z.size(); ++i) z(i) = 3.0 * rng.normal();
    const Eigen::MatrixXd w = random_spd(rng, static_cast<int>(z.size()), 0.2);
    const auto [val, pt] = cone_infimum(z, w, q2);
    CHECK(val >= 0.0);
    CHECK(val <= z.dot(w * z) + 1e-10);
    const Eigen::VectorXd d = pt.image - z;
    CHECK(val == doctest::Approx(d.dot(w * d)).epsilon(1e-10));
  }
}

TEST_CASE("repeated calls are bitwise identical") {
  NormalRng rng(16);
  Eigen::VectorXd z(6);
  for (int i = 0; i < 6; ++i) z(i) = 2.0 * rng.normal();
  const Eigen::MatrixXd w = random_spd(rng, 6, 0.3);
  const auto [v1, p1] = cone_infimum(z, w, 3);
  const auto [v2, p2] = cone_infimum(z, w, 3);
  CHECK(v1 == v2);
  CHECK((p1.omega - p2.omega).cwiseAbs().maxCoeff() == 0.0);
}
