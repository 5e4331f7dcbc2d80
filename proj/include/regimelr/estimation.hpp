#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "regimelr/ar_fit.hpp"
#include "regimelr/mixture.hpp"

namespace regimelr {

// Nuisance grid over which the profile likelihood is maximized.
struct AlphaGrid {
  Family family = Family::GMAR;
  std::vector<Eigen::VectorXd> points;

  // {0.05, 0.10, ..., 0.95}.
  static AlphaGrid gmar_default();
  // 5 x 8 lattice: a_0 in {-2,-1,0,1,2}, a_1 in +/-{0.25..2} (4 values per
  // sign), bounded away from a_1 = 0.
  static AlphaGrid lmar_default_m1();
};

// Genetic-algorithm and local-polish configuration. The feasible region is
// data adaptive: both regimes stationary, sigma2 within
// [sigma2_lo_factor, sigma2_hi_factor] times the sample variance, and
// intercepts within intercept_sd_mult sample standard deviations of the
// sample mean.
struct GaConfig {
  int population = 60;
  int generations = 150;
  int tournament = 3;
  double blend_alpha = 0.5;
  double mutation_prob = 0.2;
  double mutation_scale = 0.1;
  double mutation_decay = 0.97;
  int elite = 2;
  int nm_max_evaluations = 2000;
  double nm_tol_x = 1e-6;
  double sigma2_lo_factor = 1e-4;
  double sigma2_hi_factor = 10.0;
  double intercept_sd_mult = 10.0;
  std::uint64_t seed = 0;
  // Test hook: skip the search and return the injected null point.
  bool null_point_only = false;
};

struct FitResult {
  Eigen::VectorXd alpha;
  MixtureParams params;
  double loglik = 0.0;
  bool converged = false;
  long evaluations = 0;
};

// Maximizes the mixture log-likelihood over (beta, phi, varphi) for a fixed
// nuisance vector. The null fit, split into equal regimes, is always part of
// the initial population, so loglik never falls below the null
// log-likelihood by more than roundoff. Throws
// std::runtime_error("empty feasible set") when no feasible candidate can
// be drawn.
FitResult fit_mixture_fixed_alpha(const MixtureSpec& spec,
                                  const Eigen::VectorXd& series,
                                  const Eigen::VectorXd& alpha,
                                  const ArFit& null_fit,
                                  const GaConfig& config);

// Convenience overload that computes the null fit internally.
FitResult fit_mixture_fixed_alpha(const MixtureSpec& spec,
                                  const Eigen::VectorXd& series,
                                  const Eigen::VectorXd& alpha,
                                  const GaConfig& config);

// One independent fit per grid point; point i uses the substream seed
// derived from (config.seed, i), so results do not depend on scheduling.
std::vector<FitResult> profile_alpha(const MixtureSpec& spec,
                                     const Eigen::VectorXd& series,
                                     const AlphaGrid& grid,
                                     const ArFit& null_fit,
                                     const GaConfig& config, int threads = 1);

}  // namespace regimelr
