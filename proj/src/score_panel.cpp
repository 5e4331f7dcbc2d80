#include "regimelr/score_panel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

namespace regimelr {

namespace {

// Parameter-dependent pieces of the stationary-density gradient, shared
// across observations when building a panel.
struct NpContext {
  int p;
  double sigma2;
  double phi_at_one;    // 1 - sum of coefficients
  double intercept;
  double mean;
  Eigen::MatrixXd gamma_inv;
  std::vector<Eigen::MatrixXd> d_gamma_inv;  // per coefficient
  Eigen::VectorXd traces;                    // tr(d_gamma_inv[i] * gamma)

  explicit NpContext(const ArParams& params) {
    p = params.p();
    sigma2 = params.sigma2;
    intercept = params.intercept;
    phi_at_one = 1.0 - params.coeffs.sum();
    const StationaryMoments mom = ar_moments(params);
    mean = mom.mean;
    gamma_inv = mom.gamma_inv;

    // Gamma^{-1} = (U'U - V'V)/sigma2 with U, V lower triangular Toeplitz;
    // each coefficient derivative of U and V is a 0/±1 Toeplitz pattern.
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j)
      for (int i = j; i < p; ++i) {
        const int k = i - j;
        u(i, j) = (k == 0) ? 1.0 : -params.coeffs(k - 1);
        v(i, j) = params.coeffs(p - 1 - k);
      }
    d_gamma_inv.resize(p);
    traces.resize(p);
    for (int c = 1; c <= p; ++c) {
      Eigen::MatrixXd du = Eigen::MatrixXd::Zero(p, p);
      Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(p, p);
      for (int j = 0; j < p; ++j)
        for (int i = j; i < p; ++i) {
          const int k = i - j;
          if (k == c) du(i, j) = -1.0;
          if (p - k == c) dv(i, j) = 1.0;
        }
      d_gamma_inv[c - 1] = (du.transpose() * u + u.transpose() * du -
                            dv.transpose() * v - v.transpose() * dv) /
                           sigma2;
      traces(c - 1) = (d_gamma_inv[c - 1] * mom.gamma).trace();
    }
  }

  Eigen::VectorXd eval(const Eigen::VectorXd& lags) const {
    const Eigen::VectorXd e = lags.array() - mean;
    const Eigen::VectorXd g = gamma_inv * e;
    const double gsum = g.sum();
    Eigen::VectorXd d(p + 2);
    d(0) = gsum / phi_at_one;
    const double mean_shift = intercept / (phi_at_one * phi_at_one);
    for (int c = 0; c < p; ++c)
      d(1 + c) = 0.5 * traces(c) + mean_shift * gsum -
                 0.5 * e.dot(d_gamma_inv[c] * e);
    d(p + 1) = (-p + e.dot(g)) / (2.0 * sigma2);
    return d;
  }
};

}  // namespace

Eigen::VectorXd ar_score_terms(double eps_std, const Eigen::VectorXd& lags,
                               double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const int p = static_cast<int>(lags.size());
  Eigen::VectorXd s(p + 2);
  const double e_over_s = eps_std / sigma;
  s(0) = e_over_s;
  for (int k = 0; k < p; ++k) s(1 + k) = lags(k) * e_over_s;
  s(p + 1) = (eps_std * eps_std - 1.0) / (2.0 * sigma * sigma);
  return s;
}

Eigen::VectorXd lmar_score_row(const Eigen::VectorXd& ar_score,
                               const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& lags_m) {
  const double w = lmar_mixing_weight(alpha, lags_m);
  const int n = static_cast<int>(ar_score.size());
  Eigen::VectorXd row(2 * n);
  row.head(n) = ar_score;
  row.tail(n) = -(1.0 - w) * ar_score;
  return row;
}

Eigen::VectorXd gmar_nabla_np_over_np(const ArParams& params,
                                      const Eigen::VectorXd& lags) {
  if (lags.size() != params.p())
    throw std::invalid_argument("lags must have length p");
  return NpContext(params).eval(lags);
}

Eigen::MatrixXd ar_hessian_terms(double eps_std, const Eigen::VectorXd& lags,
                                 double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const int p = static_cast<int>(lags.size());
  const double s2 = sigma * sigma;
  const double e2 = eps_std * eps_std;
  const double h2 = (e2 - 1.0) / s2;
  const double h3 = (eps_std * e2 - 3.0 * eps_std) / (2.0 * s2 * sigma);
  const double h4 = (e2 * e2 - 6.0 * e2 + 3.0) / (4.0 * s2 * s2);

  Eigen::MatrixXd h(p + 2, p + 2);
  h(0, 0) = h2;
  for (int k = 0; k < p; ++k) {
    h(0, 1 + k) = lags(k) * h2;
    h(1 + k, 0) = h(0, 1 + k);
    for (int l = 0; l <= k; ++l) {
      h(1 + k, 1 + l) = lags(k) * lags(l) * h2;
      h(1 + l, 1 + k) = h(1 + k, 1 + l);
    }
    h(1 + k, p + 1) = lags(k) * h3;
    h(p + 1, 1 + k) = h(1 + k, p + 1);
  }
  h(0, p + 1) = h3;
  h(p + 1, 0) = h3;
  h(p + 1, p + 1) = h4;
  return h;
}

Eigen::VectorXd gmar_score_row(const Eigen::VectorXd& ar_score,
                               const Eigen::VectorXd& np_terms,
                               const Eigen::MatrixXd& hessian_terms, int p) {
  const int q2 = p + 1;
  const int q_vartheta = q2 * (q2 + 1) / 2;
  Eigen::VectorXd row(p + 2 + q_vartheta);
  row.head(p + 2) = ar_score;

  // X_ij in terms of the full (p+2)-dimensional derivative vectors; the
  // varying parameters are positions 1..q2 (coefficients then variance).
  const auto x_term = [&](int i, int j) {
    return np_terms(i) * ar_score(j) + ar_score(i) * np_terms(j) +
           hessian_terms(i, j);
  };
  int pos = p + 2;
  for (int i = 1; i <= q2; ++i) row(pos++) = 0.5 * x_term(i, i);
  for (int i = 1; i <= q2; ++i)
    for (int j = i + 1; j <= q2; ++j) row(pos++) = x_term(i, j);
  return row;
}

ScorePanel build_score_panel(Family family, const ArFit& null_fit,
                             const Eigen::VectorXd& series,
                             const Eigen::VectorXd& alpha, int m) {
  const int p = null_fit.params.p();
  const int t_count = static_cast<int>(series.size()) - p;
  if (t_count != null_fit.residuals_std.size())
    throw std::invalid_argument("series and fit residuals disagree");
  if (!(null_fit.params.sigma2 > 0.0))
    throw std::invalid_argument("sigma2 must be positive");
  const double sigma = std::sqrt(null_fit.params.sigma2);

  ScorePanel panel;
  panel.theta_dim = p + 2;
  panel.alpha_dependent = family == Family::LMAR;
  const int q2 = p + 1;
  panel.vartheta_dim =
      family == Family::LMAR ? p + 2 : q2 * (q2 + 1) / 2;
  panel.rows.resize(t_count, panel.r());

  NpContext* np_ctx = nullptr;
  std::unique_ptr<NpContext> np_holder;
  if (family == Family::GMAR) {
    np_holder = std::make_unique<NpContext>(null_fit.params);
    np_ctx = np_holder.get();
  } else if (m < 1 || m > p || alpha.size() != m + 1) {
    throw std::invalid_argument("LMAR requires alpha of length m + 1 <= p + 1");
  }

  Eigen::VectorXd lags(p);
  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < p; ++k) lags(k) = series(p + t - 1 - k);
    const double eps = null_fit.residuals_std(t);
    const Eigen::VectorXd s = ar_score_terms(eps, lags, sigma);
    if (family == Family::LMAR) {
      panel.rows.row(t) = lmar_score_row(s, alpha, lags.head(m)).transpose();
    } else {
      panel.rows.row(t) =
          gmar_score_row(s, np_ctx->eval(lags),
                         ar_hessian_terms(eps, lags, sigma), p)
              .transpose();
    }
  }
  return panel;
}

InfoMatrix info_matrix(const ScorePanel& panel) {
  const int t_count = static_cast<int>(panel.rows.rows());
  if (t_count < panel.r())
    throw std::invalid_argument("need at least r observations");
  InfoMatrix info;
  info.matrix = panel.rows.transpose() * panel.rows / t_count;
  info.matrix = 0.5 * (info.matrix + info.matrix.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      info.matrix, Eigen::EigenvaluesOnly);
  info.min_eigenvalue = es.eigenvalues().minCoeff();
  info.max_eigenvalue = es.eigenvalues().maxCoeff();
  return info;
}

}  // namespace regimelr
