#pragma once

#include <cstdint>
#include <span>

namespace esa {

/// 32-bit permuted congruential generator (PCG, XSH-RR output function) with
/// 64-bit state and a selectable stream. Chosen over std::mt19937 because its
/// output is a pure function of (seed, stream) with no implementation-defined
/// behavior, so trajectories replay bit-identically on any platform.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 1);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) built from 53 random bits.
  double next_double();

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
  std::uint32_t next_below(std::uint32_t bound);

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// Stream constants keep the environment sampler, the init-state schedule and
// the instance generators on disjoint sequences even under a shared seed.
inline constexpr std::uint64_t kStreamEnv = 0x853c49e6748fea9bULL;
inline constexpr std::uint64_t kStreamSchedule = 0xda3e39cb94b95bdbULL;
inline constexpr std::uint64_t kStreamGenerator = 0x5851f42d4c957f2dULL;
inline constexpr std::uint64_t kStreamPerturb = 0x2545f4914f6cdd1dULL;

/// Inverse-CDF lookup: smallest index i with u < cumulative[i].
/// cumulative must be nondecreasing with back() == 1.0 exactly; u in [0, 1).
std::size_t categorical_index(std::span<const double> cumulative, double u);

}  // namespace esa
