#include "carstat/rng.hpp"

#include "carstat/dist.hpp"
#include "carstat/errors.hpp"

namespace carstat {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  key_ = mix64(mix64(seed + kGolden) ^ mix64(stream + 0x5851F42D4C957F2DULL));
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::next_range(double lo, double hi) { return lo + next_double() * (hi - lo); }

double Rng::next_normal() { return normal_quantile(next_open()); }

bool Rng::next_bernoulli(double p) { return next_double() < p; }

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) fail(Err::out_of_range, "next_below(0)");
  // Lemire's multiply-shift with rejection of the biased low range.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace carstat
