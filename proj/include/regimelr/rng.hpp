#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace regimelr {

// splitmix64 finalizer; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the independent substream `index` (replication, grid point, ...)
// of a run seeded with `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ splitmix64(index + 0x51a7b0d5c1e2f3a4ULL);
}

// Standard-normal generator: mt19937_64 uniforms through the Box-Muller
// transform. Both steps are fully specified, so a given seed produces the
// same stream on every platform and compiler.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0,1): top 53 bits, offset by half an ulp so 0 is excluded.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) *
           (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 6.283185307179586477 * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace regimelr
