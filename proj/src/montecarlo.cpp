#include "regimelr/montecarlo.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "regimelr/parallel.hpp"
#include "regimelr/rng.hpp"

namespace regimelr {

namespace {

constexpr std::uint64_t kReplicationDomain = 0x7265706c69ULL;

Eigen::VectorXd simulate_dgp(const StudyConfig& config, int length,
                             std::uint64_t seed) {
  switch (config.dgp) {
    case Dgp::AR:
      return simulate_ar(config.ar_params, length, config.presample, seed);
    case Dgp::LMAR:
    case Dgp::GMAR:
      return simulate_mixture(config.mix_spec, config.mix_params, length,
                              config.presample, seed);
  }
  throw std::invalid_argument("unknown dgp");
}

StudyResult run_study(const StudyConfig& config) {
  if (config.replications < 1)
    throw std::invalid_argument("replications must be >= 1");
  if (config.sample_sizes.empty())
    throw std::invalid_argument("no sample sizes");
  if (config.test_families.empty())
    throw std::invalid_argument("no test families");
  for (const double level : config.levels)
    if (!(level > 0.0 && level < 1.0))
      throw std::invalid_argument("levels must lie in (0,1)");

  const auto start = std::chrono::steady_clock::now();
  const int n_sizes = static_cast<int>(config.sample_sizes.size());
  const int n_fams = static_cast<int>(config.test_families.size());
  const int reps = config.replications;

  StudyResult result;
  result.cells.resize(n_sizes * n_fams);
  for (int s = 0; s < n_sizes; ++s)
    for (int f = 0; f < n_fams; ++f) {
      StudyCell& cell = result.cells[s * n_fams + f];
      cell.family = config.test_families[f];
      cell.sample_size = config.sample_sizes[s];
      cell.p_values.assign(reps, std::numeric_limits<double>::quiet_NaN());
    }

  const std::uint64_t rep_base = splitmix64(config.seed ^ kReplicationDomain);
  // One work unit per (sample size, replication); the tests inside run
  // single threaded so the outer loop parallelizes cleanly.
  parallel_for(n_sizes * reps, config.threads, [&](int unit) {
    const int s = unit / reps;
    const int i = unit % reps;
    const int t_len = config.sample_sizes[s];
    const std::uint64_t rep_seed =
        substream_seed(substream_seed(rep_base, s), i);

    Eigen::VectorXd series;
    try {
      series = simulate_dgp(config, t_len, rep_seed);
    } catch (const std::exception&) {
      return;  // leaves NaN p-values in every family cell
    }
    for (int f = 0; f < n_fams; ++f) {
      MixtureSpec spec;
      spec.family = config.test_families[f];
      spec.p = config.p;
      spec.m = config.m;
      LrTestConfig test_cfg;
      test_cfg.j_count = config.j_count;
      test_cfg.seed = substream_seed(rep_seed, 1000 + f);
      test_cfg.threads = 1;
      test_cfg.ga = config.ga;
      test_cfg.sim = config.sim;
      try {
        const LrTestReport rep = run_test(spec, series, test_cfg);
        result.cells[s * n_fams + f].p_values[i] = rep.p_value;
      } catch (const std::exception&) {
        // failure stays recorded as NaN
      }
    }
  });

  int failures = 0;
  for (StudyCell& cell : result.cells) {
    cell.rejection_freq.assign(config.levels.size(), 0.0);
    int valid = 0;
    for (const double p : cell.p_values) {
      if (std::isnan(p)) {
        ++cell.failures;
        continue;
      }
      ++valid;
      for (std::size_t l = 0; l < config.levels.size(); ++l)
        if (p < config.levels[l]) cell.rejection_freq[l] += 1.0;
    }
    for (double& freq : cell.rejection_freq)
      freq = valid > 0 ? freq / valid : 0.0;
    failures += cell.failures;
  }
  result.failed_replications = failures;

  const int total_runs = n_sizes * n_fams * reps;
  if (failures > config.max_failure_rate * total_runs)
    throw std::runtime_error("study failure rate above threshold");

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace

StudyResult run_size_study(const StudyConfig& config) {
  if (config.dgp != Dgp::AR)
    throw std::invalid_argument("size study requires an AR data-generating process");
  return run_study(config);
}

StudyResult run_power_study(const StudyConfig& config) {
  if (config.dgp == Dgp::AR)
    throw std::invalid_argument("power study requires a mixture data-generating process");
  return run_study(config);
}

}  // namespace regimelr
