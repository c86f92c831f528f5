#pragma once

#include <cstdint>
#include <optional>

namespace bgpr {

/// splitmix64 step: advances `state` by the golden-ratio increment and
/// returns the mixed output.
///   state = 0 -> 0xE220A8397B1DCDAF, then 0x6E789E6AA1B965F4
std::uint64_t splitmix64(std::uint64_t& state);

/// Stateless 64-bit finalizer of splitmix64 applied to `x + golden`.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent stream derived from a parent seed and a list of
/// indices: s = mix64(parent); s = mix64(s ^ i) for each index.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b);

/// xoshiro256** seeded by four consecutive splitmix64 outputs.
/// Doubles are (next() >> 11) * 2^-53; Gaussians use Box-Muller with the
/// second deviate cached for the following call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal deviate.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t s_[4];
  std::optional<double> cached_;
};

}  // namespace bgpr
