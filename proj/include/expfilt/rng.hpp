#pragma once

#include <cmath>
#include <cstdint>

namespace expfilt {

/// Identifies one simulated path: same (base_seed, path_index) always
/// reproduces bit-identical noise increments.
struct NoiseSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t path_index = 0;
};

/// Stateless counter-based generator keyed by (base_seed, path_index,
/// step, channel). Draws are independent of evaluation order, so paths
/// can be simulated concurrently and still reproduce exactly.
///
/// The stream is the SplitMix64 output function evaluated at an
/// arbitrary counter offset from a per-path key.
class CounterRng {
 public:
  CounterRng(std::uint64_t base_seed, std::uint64_t path_index)
      : key_(mix(mix(base_seed + kGamma) ^
                 (0x632be59bd9b4e019ULL * (path_index + 1)))) {}

  explicit CounterRng(const NoiseSeed& seed)
      : CounterRng(seed.base_seed, seed.path_index) {}

  std::uint64_t bits(std::uint64_t step, std::uint32_t channel) const {
    const std::uint64_t ctr = step * kChannelStride + channel;
    return mix(key_ + ctr * kGamma);
  }

  // Uniform on the open interval (0,1).
  double uniform(std::uint64_t step, std::uint32_t channel) const {
    return (static_cast<double>(bits(step, channel) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw for noise component `channel` at time step
  /// `step`. Distinct channels are independent streams.
  double normal(std::uint64_t step, std::uint32_t channel) const {
    const double u1 = uniform(step, 2 * channel);
    const double u2 = uniform(step, 2 * channel + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  // Channel layout for SDE simulation: V-components first, then W.
  static constexpr std::uint32_t kChannelStride = 64;  // supports 32 noise dims

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace expfilt
