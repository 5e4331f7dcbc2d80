#include "regimelr/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "regimelr/rng.hpp"

namespace regimelr {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kIndexClamp = 700.0;

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (std::isinf(hi) && hi < 0.0) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

double clamp_index(double x) {
  return std::clamp(x, -kIndexClamp, kIndexClamp);
}

// Per-regime quantities reused across observations.
struct RegimeCtx {
  double intercept;
  Eigen::VectorXd coeffs;
  double sigma2;
  double log_norm;  // -(log 2 pi + log sigma2) / 2
  // GMAR only: stationary density pieces.
  double stat_mean;
  Eigen::MatrixXd gamma_inv;
  double log_np_const;  // -(p log 2 pi + log det Gamma) / 2

  explicit RegimeCtx(const ArParams& ar, bool with_stationary) {
    intercept = ar.intercept;
    coeffs = ar.coeffs;
    sigma2 = ar.sigma2;
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    log_norm = -0.5 * (kLogTwoPi + std::log(sigma2));
    if (with_stationary) {
      const StationaryMoments mom = ar_moments(ar);
      stat_mean = mom.mean;
      gamma_inv = mom.gamma_inv;
      log_np_const = -0.5 * (ar.p() * kLogTwoPi + mom.log_det_gamma);
    } else {
      stat_mean = 0.0;
      log_np_const = 0.0;
    }
  }

  double log_density(double y, const Eigen::VectorXd& lags) const {
    double mean = intercept;
    for (int k = 0; k < coeffs.size(); ++k) mean += coeffs(k) * lags(k);
    const double r = y - mean;
    return log_norm - 0.5 * r * r / sigma2;
  }

  double log_stationary_density(const Eigen::VectorXd& lags) const {
    const Eigen::VectorXd c = lags.array() - stat_mean;
    return log_np_const - 0.5 * c.dot(gamma_inv * c);
  }
};

// Log mixing weights (log alpha_t, log(1 - alpha_t)) for one observation.
struct WeightCtx {
  Family family;
  Eigen::VectorXd lmar_alpha;
  double log_alpha = 0.0;      // GMAR: log alpha
  double log_1m_alpha = 0.0;   // GMAR: log(1 - alpha)

  std::pair<double, double> log_weights(const RegimeCtx& r1,
                                        const RegimeCtx& r2,
                                        const Eigen::VectorXd& lags) const {
    if (family == Family::LMAR) {
      double idx = lmar_alpha(0);
      for (int j = 1; j < lmar_alpha.size(); ++j)
        idx += lmar_alpha(j) * lags(j - 1);
      idx = clamp_index(idx);
      return {-softplus(-idx), -softplus(idx)};
    }
    const double a = log_alpha + r1.log_stationary_density(lags);
    const double b = log_1m_alpha + r2.log_stationary_density(lags);
    const double lse = log_sum_exp(a, b);
    return {a - lse, b - lse};
  }
};

WeightCtx make_weight_ctx(const MixtureSpec& spec,
                          const Eigen::VectorXd& alpha) {
  WeightCtx w;
  w.family = spec.family;
  if (spec.family == Family::LMAR) {
    if (alpha.size() != spec.m + 1)
      throw std::invalid_argument("LMAR alpha must have m + 1 entries");
    w.lmar_alpha = alpha;
  } else {
    if (alpha.size() != 1 || !(alpha(0) > 0.0 && alpha(0) < 1.0))
      throw std::invalid_argument("GMAR alpha must be a scalar in (0,1)");
    w.log_alpha = std::log(alpha(0));
    w.log_1m_alpha = std::log1p(-alpha(0));
  }
  return w;
}

}  // namespace

void MixtureSpec::validate() const {
  if (p < 1) throw std::invalid_argument("p must be >= 1");
  if (family == Family::LMAR && (m < 1 || m > p))
    throw std::invalid_argument("LMAR requires 1 <= m <= p");
}

ArParams regime_params(const MixtureSpec& spec, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& regime) {
  if (regime.size() != spec.q2())
    throw std::invalid_argument("regime block has wrong length");
  if (beta.size() != spec.q1())
    throw std::invalid_argument("common block has wrong length");
  ArParams ar;
  if (spec.family == Family::GMAR) {
    ar.intercept = beta(0);
    ar.coeffs = regime.head(spec.p);
    ar.sigma2 = regime(spec.p);
  } else {
    ar.intercept = regime(0);
    ar.coeffs = regime.segment(1, spec.p);
    ar.sigma2 = regime(spec.p + 1);
  }
  return ar;
}

double lmar_mixing_weight(const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& lags) {
  if (alpha.size() != lags.size() + 1)
    throw std::invalid_argument("alpha must have one more entry than lags");
  double idx = alpha(0);
  for (int j = 1; j < alpha.size(); ++j) idx += alpha(j) * lags(j - 1);
  idx = clamp_index(idx);
  if (idx >= 0.0) return 1.0 / (1.0 + std::exp(-idx));
  const double e = std::exp(idx);
  return e / (1.0 + e);
}

double gmar_mixing_weight(double alpha, const ArParams& regime1,
                          const ArParams& regime2,
                          const Eigen::VectorXd& lags) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("GMAR alpha must lie in (0,1)");
  if (lags.size() != regime1.p() || lags.size() != regime2.p())
    throw std::invalid_argument("lags must have length p");
  const RegimeCtx r1(regime1, true), r2(regime2, true);
  const double a = std::log(alpha) + r1.log_stationary_density(lags);
  const double b = std::log1p(-alpha) + r2.log_stationary_density(lags);
  // weight = exp(a) / (exp(a) + exp(b)) = logistic(a - b)
  const double d = a - b;
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

double mixture_cond_logdensity(const MixtureSpec& spec,
                               const MixtureParams& params, double y,
                               const Eigen::VectorXd& lags) {
  spec.validate();
  const bool gmar = spec.family == Family::GMAR;
  const RegimeCtx r1(regime_params(spec, params.beta, params.phi), gmar);
  const RegimeCtx r2(regime_params(spec, params.beta, params.varphi), gmar);
  const WeightCtx w = make_weight_ctx(spec, params.alpha);
  const auto [lw1, lw2] = w.log_weights(r1, r2, lags);
  return log_sum_exp(lw1 + r1.log_density(y, lags),
                     lw2 + r2.log_density(y, lags));
}

double mixture_loglik(const MixtureSpec& spec, const MixtureParams& params,
                      const Eigen::VectorXd& series) {
  return MixtureLoglik(spec, series).eval(params);
}

Repar reparameterize(const MixtureSpec& spec, double alpha,
                     const Eigen::VectorXd& phi,
                     const Eigen::VectorXd& varphi) {
  Repar r;
  r.varpi = phi - varphi;
  r.pi = spec.family == Family::GMAR
             ? (alpha * phi + (1.0 - alpha) * varphi).eval()
             : phi;
  return r;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> reparameterize_inverse(
    const MixtureSpec& spec, double alpha, const Eigen::VectorXd& pi,
    const Eigen::VectorXd& varpi) {
  if (spec.family == Family::GMAR)
    return {pi + (1.0 - alpha) * varpi, pi - alpha * varpi};
  return {pi, pi - varpi};
}

Eigen::VectorXd simulate_mixture(const MixtureSpec& spec,
                                 const MixtureParams& params, int length,
                                 int presample, std::uint64_t seed) {
  spec.validate();
  if (length <= 0) throw std::invalid_argument("length must be positive");
  if (presample < 0) throw std::invalid_argument("presample must be >= 0");
  const bool gmar = spec.family == Family::GMAR;
  const ArParams ar1 = regime_params(spec, params.beta, params.phi);
  const ArParams ar2 = regime_params(spec, params.beta, params.varphi);
  const RegimeCtx r1(ar1, gmar), r2(ar2, gmar);
  if (!check_stationarity(ar1.coeffs) || !check_stationarity(ar2.coeffs))
    throw std::invalid_argument("nonstationary");
  const WeightCtx w = make_weight_ctx(spec, params.alpha);

  const int p = spec.p;
  const double mean1 = ar1.intercept / (1.0 - ar1.coeffs.sum());
  const double mean2 = ar2.intercept / (1.0 - ar2.coeffs.sum());
  Eigen::VectorXd recent = Eigen::VectorXd::Constant(p, 0.5 * (mean1 + mean2));

  NormalRng rng(seed);
  Eigen::VectorXd out(length + p);
  const double sd1 = std::sqrt(ar1.sigma2), sd2 = std::sqrt(ar2.sigma2);
  const int total = presample + length + p;
  for (int t = 0; t < total; ++t) {
    const auto [lw1, lw2] = w.log_weights(r1, r2, recent);
    const bool first = std::log(rng.uniform()) < lw1;
    (void)lw2;
    const ArParams& ar = first ? ar1 : ar2;
    double y = ar.intercept + (first ? sd1 : sd2) * rng.normal();
    for (int k = 0; k < p; ++k) y += ar.coeffs(k) * recent(k);
    for (int k = p - 1; k > 0; --k) recent(k) = recent(k - 1);
    recent(0) = y;
    if (t >= presample) out(t - presample) = y;
  }
  return out;
}

MixtureLoglik::MixtureLoglik(const MixtureSpec& spec,
                             const Eigen::VectorXd& series)
    : spec_(spec) {
  spec_.validate();
  const int p = spec_.p;
  const int t_count = static_cast<int>(series.size()) - p;
  if (t_count < 1) throw std::invalid_argument("series shorter than p + 1");
  lags_.resize(t_count, p);
  y_.resize(t_count);
  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < p; ++k) lags_(t, k) = series(p + t - 1 - k);
    y_(t) = series(p + t);
  }
}

double MixtureLoglik::eval(const MixtureParams& params) const {
  const bool gmar = spec_.family == Family::GMAR;
  const RegimeCtx r1(regime_params(spec_, params.beta, params.phi), gmar);
  const RegimeCtx r2(regime_params(spec_, params.beta, params.varphi), gmar);
  const WeightCtx w = make_weight_ctx(spec_, params.alpha);

  const int t_count = static_cast<int>(y_.size());
  const int p = spec_.p;
  double total = 0.0;
  Eigen::VectorXd lag_row(p);
  for (int t = 0; t < t_count; ++t) {
    lag_row = lags_.row(t);
    const auto [lw1, lw2] = w.log_weights(r1, r2, lag_row);
    total += log_sum_exp(lw1 + r1.log_density(y_(t), lag_row),
                         lw2 + r2.log_density(y_(t), lag_row));
  }
  return total;
}

}  // namespace regimelr
