#pragma once

#include <cstdint>

namespace carstat {

// Counter-based splittable generator (CARSTAT RNG v1, fixed for the project).
//
// Each stream is keyed by (seed, stream id); the i-th output is
// mix64(key + (i+1) * GOLDEN) where mix64 is the SplitMix64 finalizer and
// GOLDEN = 0x9E3779B97F4A7C15. Streams are independent for distinct
// (seed, stream) pairs and outputs are a pure function of (seed, stream, i),
// so parallel consumers reproduce identical sequences regardless of
// scheduling. Normal variates use the inverse-CDF transform (normal_quantile
// on a strictly-open uniform), never Box-Muller, so sequences are
// reproducible bit-for-bit across platforms.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Uniform on (0, 1), strictly open; safe as a quantile-function argument.
  double next_open();

  // Uniform on [lo, hi).
  double next_range(double lo, double hi);

  // Standard normal via inverse CDF.
  double next_normal();

  bool next_bernoulli(double p);

  // Uniform integer in [0, n), n >= 1. Lemire multiply-shift with rejection.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace carstat
