#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace iotchain {

// Deterministic generator with a pinned algorithm (SplitMix64) so that seeded
// runs produce identical streams on every platform and toolchain. Standard
// library distributions are implementation-defined, so all derived draws
// (bounded ints, uniforms, normals, shuffles) are defined here as well.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) via the fixed-point multiply reduction. `bound`
  // must be nonzero.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * bound;
    return static_cast<std::uint64_t>(product >> 64);
  }

  // Uniform in [lo, hi], inclusive on both ends.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
  }

  // Uniform in [0, 1) with 53 random bits.
  double unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1], for logs.
  double unit_open_low() { return 1.0 - unit(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double r = std::sqrt(-2.0 * std::log(unit_open_low()));
    double theta = 2.0 * std::numbers::pi * unit();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Fisher-Yates shuffle driven by below(), back to front.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable derivation of independent streams from one scenario seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng r(seed ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
  return r.next_u64();
}

}  // namespace iotchain
