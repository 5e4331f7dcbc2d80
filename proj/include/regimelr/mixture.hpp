#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "regimelr/ar_process.hpp"

namespace regimelr {

enum class Family { LMAR, GMAR };

// Two-regime mixture AR(p) layout. The p + 2 linear-AR parameters
// (intercept, coefficients, variance) are split into q1 common and q2
// regime-specific ones: LMAR shares nothing (q1 = 0), GMAR shares the
// intercept (q1 = 1). Regime blocks keep the natural parameter order.
struct MixtureSpec {
  Family family = Family::LMAR;
  int p = 1;
  // Logistic lag order, LMAR only: weight depends on (y_{t-1},...,y_{t-m}).
  int m = 1;

  int q1() const { return family == Family::GMAR ? 1 : 0; }
  int q2() const { return family == Family::GMAR ? p + 1 : p + 2; }
  void validate() const;
};

struct MixtureParams {
  // LMAR: (a_0,...,a_m) with (a_1,...,a_m) != 0; GMAR: one entry in (0,1).
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;    // q1 common parameters
  Eigen::VectorXd phi;     // q2 regime-1 parameters
  Eigen::VectorXd varphi;  // q2 regime-2 parameters
};

// Rebuilds one regime's ArParams from the common block and a regime block.
ArParams regime_params(const MixtureSpec& spec, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& regime);

// logistic(a_0 + sum_j a_j lags[j-1]) with the linear index clamped to
// [-700, 700] before exponentiation.
double lmar_mixing_weight(const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& lags);

// alpha n_p(lags; regime1) / [alpha n_p(lags; regime1) +
// (1-alpha) n_p(lags; regime2)] with n_p the p-dimensional stationary
// Gaussian density of a regime; evaluated in log space.
double gmar_mixing_weight(double alpha, const ArParams& regime1,
                          const ArParams& regime2,
                          const Eigen::VectorXd& lags);

// log of alpha_t f(y; regime1) + (1 - alpha_t) f(y; regime2), via
// log-sum-exp of the weighted component Gaussian log-densities.
double mixture_cond_logdensity(const MixtureSpec& spec,
                               const MixtureParams& params, double y,
                               const Eigen::VectorXd& lags);

// Sum of mixture_cond_logdensity over the T observations of `series`
// (p initial values followed by T observations).
double mixture_loglik(const MixtureSpec& spec, const MixtureParams& params,
                      const Eigen::VectorXd& series);

// Affine reparameterization separating the null-restricted directions:
// LMAR (pi, varpi) = (phi, phi - varphi); GMAR (pi, varpi) =
// (alpha phi + (1-alpha) varphi, phi - varphi).
struct Repar {
  Eigen::VectorXd pi;
  Eigen::VectorXd varpi;
};
Repar reparameterize(const MixtureSpec& spec, double alpha,
                     const Eigen::VectorXd& phi,
                     const Eigen::VectorXd& varphi);
// Inverse map back to (phi, varphi): LMAR (pi, pi - varpi); GMAR
// (pi + (1-alpha) varpi, pi - alpha varpi).
std::pair<Eigen::VectorXd, Eigen::VectorXd> reparameterize_inverse(
    const MixtureSpec& spec, double alpha, const Eigen::VectorXd& pi,
    const Eigen::VectorXd& varpi);

// Simulates p initial values plus `length` observations from the mixture:
// at each step the regime indicator is Bernoulli(alpha_t) given the lags.
// Starts from the average of the two regimes' stationary means and discards
// `presample` draws.
Eigen::VectorXd simulate_mixture(const MixtureSpec& spec,
                                 const MixtureParams& params, int length,
                                 int presample, std::uint64_t seed);

// Repeated evaluation of the mixture log-likelihood on a fixed series (the
// global optimizer's hot path). Precomputes the lag matrix once; eval()
// recomputes only parameter-dependent quantities.
class MixtureLoglik {
 public:
  MixtureLoglik(const MixtureSpec& spec, const Eigen::VectorXd& series);

  double eval(const MixtureParams& params) const;

  int t_count() const { return static_cast<int>(y_.size()); }
  const MixtureSpec& spec() const { return spec_; }

 private:
  MixtureSpec spec_;
  Eigen::MatrixXd lags_;  // T x p, row t = (y_{t-1}, ..., y_{t-p})
  Eigen::VectorXd y_;     // T
};

}  // namespace regimelr
