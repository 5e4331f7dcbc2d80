#pragma once

#include <cstdint>
#include <vector>

#include "regimelr/lr_test.hpp"

namespace regimelr {

enum class Dgp { AR, LMAR, GMAR };

// Size/power study design: simulate the data-generating process, run the
// requested LR tests on every replication, tabulate rejection frequencies.
struct StudyConfig {
  Dgp dgp = Dgp::AR;
  // AR data-generating process.
  ArParams ar_params;
  // Mixture data-generating process (LMAR or GMAR).
  MixtureSpec mix_spec;
  MixtureParams mix_params;

  std::vector<int> sample_sizes = {250, 500, 1000};
  int replications = 200;
  int j_count = 500;
  std::vector<double> levels = {0.10, 0.05, 0.01};
  // Model order used by the tests (the tests always fit an AR(p) null).
  int p = 1;
  int m = 1;
  // Which tests to run on each replication; running a family whose mixing
  // weight differs from the DGP's gives power against "wrong" alternatives.
  std::vector<Family> test_families = {Family::LMAR, Family::GMAR};
  int presample = 200;
  std::uint64_t seed = 0;
  GaConfig ga;
  SimConfig sim;
  int threads = 1;
  // A study with more than this fraction of failed replications is itself
  // considered failed.
  double max_failure_rate = 0.02;
};

// Results of one (test family, sample size) cell.
struct StudyCell {
  Family family = Family::LMAR;
  int sample_size = 0;
  // Indexed by replication; failed replications carry NaN.
  std::vector<double> p_values;
  // Aligned with StudyConfig::levels; failed replications excluded.
  std::vector<double> rejection_freq;
  int failures = 0;
};

struct StudyResult {
  std::vector<StudyCell> cells;  // sample-size major, then family
  int failed_replications = 0;
  // Wall-clock diagnostic; deliberately excluded from serialized reports so
  // outputs stay byte-identical across reruns.
  double wall_seconds = 0.0;
};

// Size study: requires dgp == AR. Per replication: simulate, run every
// configured test, record the p-value at each sample size. Replication i
// uses a seed substream derived from (seed, sample size, i), so studies are
// parallelizable and resumable. Throws std::runtime_error when the failure
// rate exceeds max_failure_rate.
StudyResult run_size_study(const StudyConfig& config);

// Power study: requires dgp in {LMAR, GMAR}; otherwise identical mechanics.
StudyResult run_power_study(const StudyConfig& config);

}  // namespace regimelr
