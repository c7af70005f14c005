#include "foj/rng.hpp"

#include <cmath>
#include <numbers>

namespace foj {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + kGolden))) {}

std::uint64_t Rng::next() { return mix(key_ + (++counter_) * kGolden); }

double Rng::uniform() { return double(next() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  const std::uint64_t span = std::uint64_t(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

}  // namespace foj
