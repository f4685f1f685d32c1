#pragma once

#include <cstdint>
#include <span>

namespace routesignal {

/**
 * SplitMix64 generator. Fixed arithmetic only, so streams are identical on
 * every platform; split() derives an independent child stream.
 */
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  SplitMix64 split() { return SplitMix64(next()); }

  std::uint64_t state() const { return state_; }

  bool operator==(const SplitMix64&) const = default;

private:
  std::uint64_t state_;
};

/// Inverse-CDF draw of an index from `probs`, accumulated in index order.
inline std::size_t sample_index(SplitMix64& rng, std::span<const double> probs) {
  const double u = rng.uniform();
  double cdf = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cdf += probs[i];
    if (u < cdf) return i;
  }
  return probs.size() - 1;
}

}  // namespace routesignal
