#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "regimelr/cone.hpp"
#include "regimelr/estimation.hpp"
#include "regimelr/score_panel.hpp"

namespace regimelr {

// Multiplier-simulation configuration.
struct SimConfig {
  // Eigenvalues of the information matrix below this fraction of the
  // largest one are lifted to that floor before inversion.
  double eigen_floor_rel = 1e-10;
  ConeConfig cone;
  // Test hooks: force all multipliers to zero; disable the single-draw
  // shortcut by simulating every grid point even when rows are shared.
  bool zero_multipliers = false;
  bool force_per_alpha = false;
};

struct NullSimResult {
  std::vector<double> sample;
  int eigen_lift_count = 0;
  // True when one panel served all grid points (rows free of the nuisance).
  bool single_draw_shortcut = false;
};

// Simulates the null distribution of the test statistic: for replication j,
// scores are re-summed with i.i.d. standard-normal multipliers, standardized
// by the inverted information matrix, and reduced to the quadratic-form
// statistic of each panel (minus the cone projection when the restricted
// block lives on the rank-one PSD cone); the maximum over panels is draw j.
// Panels correspond to nuisance grid points; pass one panel when the rows do
// not depend on the nuisance. Deterministic given seed; replication j uses
// its own substream.
NullSimResult simulate_null_distribution(const std::vector<ScorePanel>& panels,
                                         int j_count, std::uint64_t seed,
                                         const SimConfig& config,
                                         int threads = 1);

// Fraction of simulated null statistics strictly greater than lr_stat.
double p_value(double lr_stat, const std::vector<double>& null_sample);

struct LrStatResult {
  double lr_stat = 0.0;
  std::vector<double> per_alpha;
  int argmax = 0;  // smallest index among maximizers
};

// 2 (profile loglik - null loglik) per grid point, clamped to 0 when the
// difference lies in (-1e-6, 0); values below -1e-6 raise
// std::runtime_error("optimizer failed nesting").
LrStatResult lr_from_fits(const std::vector<FitResult>& fits,
                          double null_loglik);

struct LrTestConfig {
  AlphaGrid grid;  // empty points -> family default
  int j_count = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  GaConfig ga;
  SimConfig sim;
};

// Statistic only: null fit, profile fits over the grid, reduction.
LrStatResult lr_statistic(const MixtureSpec& spec,
                          const Eigen::VectorXd& series, const AlphaGrid& grid,
                          const LrTestConfig& config);

struct LrTestReport {
  MixtureSpec spec;
  std::vector<Eigen::VectorXd> grid_points;
  double lr_stat = 0.0;
  std::vector<double> per_alpha;
  int argmax = 0;
  std::vector<double> null_sample;
  double p_value = 1.0;
  // Null-fit block.
  ArParams null_params;
  double null_loglik = 0.0;
  bool null_stationary = true;
  // Estimation and simulation diagnostics.
  std::vector<bool> fit_converged;
  std::vector<long> fit_evaluations;
  int eigen_lift_count = 0;
  bool single_draw_shortcut = false;
  // Reproducibility echo.
  std::uint64_t seed = 0;
  int j_count = 0;
};

// End-to-end test: fit, statistic, multiplier simulation, p-value. Fully
// reproducible from (series, config).
LrTestReport run_test(const MixtureSpec& spec, const Eigen::VectorXd& series,
                      const LrTestConfig& config);

// Family default grid (GMAR 19 scalars; LMAR the m = 1 lattice). Throws for
// LMAR with m > 1, where no default is defined.
AlphaGrid default_grid(const MixtureSpec& spec);

}  // namespace regimelr
