#pragma once

#include <Eigen/Dense>

#include "regimelr/ar_fit.hpp"
#include "regimelr/mixture.hpp"

namespace regimelr {

// T per-observation score rows evaluated at the null fit. Each row is the
// AR-score block (theta, dimension p + 2) followed by the block of
// directions restricted by the null (vartheta).
struct ScorePanel {
  Eigen::MatrixXd rows;  // T x r
  int theta_dim = 0;
  int vartheta_dim = 0;
  // LMAR rows change with the nuisance vector; GMAR rows do not.
  bool alpha_dependent = false;

  int r() const { return theta_dim + vartheta_dim; }
};

// Empirical information matrix rows'rows / T with eigenvalue diagnostics.
struct InfoMatrix {
  Eigen::MatrixXd matrix;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

// Derivative of the log conditional Gaussian density with respect to
// (intercept, coefficients, variance), divided by the density itself:
// ((1, lags) eps / sigma, (eps^2 - 1) / (2 sigma^2)).
Eigen::VectorXd ar_score_terms(double eps_std, const Eigen::VectorXd& lags,
                               double sigma);

// (ar_score, -(1 - w) ar_score) with w the logistic mixing weight at
// lags_m = first m lags.
Eigen::VectorXd lmar_score_row(const Eigen::VectorXd& ar_score,
                               const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& lags_m);

// Gradient of the log stationary p-dimensional Gaussian density with
// respect to (intercept, coefficients, variance), divided by the density:
// components (d1, d2, d3).
Eigen::VectorXd gmar_nabla_np_over_np(const ArParams& params,
                                      const Eigen::VectorXd& lags);

// Second derivative of the conditional Gaussian density divided by the
// density itself, a symmetric (p+2) x (p+2) matrix with entries built from
// (eps^2 - 1), (eps^3 - 3 eps) and (eps^4 - 6 eps^2 + 3).
Eigen::MatrixXd ar_hessian_terms(double eps_std, const Eigen::VectorXd& lags,
                                 double sigma);

// GMAR score row: the AR-score block followed by c_ij X_ij over the index
// pairs 1 <= i <= j <= q2 (squares first, then off-diagonals row-major),
// where X_ij combines products of the conditional-density and
// stationary-density derivatives with the Hessian term, and c_ii = 1/2,
// c_ij = 1 for i < j.
Eigen::VectorXd gmar_score_row(const Eigen::VectorXd& ar_score,
                               const Eigen::VectorXd& np_terms,
                               const Eigen::MatrixXd& hessian_terms, int p);

// Builds the panel for one family at the null fit. `alpha` is the LMAR
// nuisance vector (m + 1 entries); GMAR ignores it and sets
// alpha_dependent = false.
ScorePanel build_score_panel(Family family, const ArFit& null_fit,
                             const Eigen::VectorXd& series,
                             const Eigen::VectorXd& alpha, int m);

InfoMatrix info_matrix(const ScorePanel& panel);

}  // namespace regimelr
