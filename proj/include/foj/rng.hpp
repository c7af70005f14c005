#pragma once

#include <cstdint>

namespace foj {

/// Counter-based generator: output n is a SplitMix64 finalizer applied to
/// key + n·golden, so a (seed, stream) pair fixes the whole sequence on every
/// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace foj
