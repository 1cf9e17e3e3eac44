#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace asms {

enum class StreamKind : std::uint32_t { agent = 1, environment = 2, aggregator = 3, misc = 4 };

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: draw k of stream (seed, kind, index) is a pure
// function of those four integers, so sequences are identical on every
// platform and independent of how many other streams exist.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamKind kind, std::uint32_t index = 0) noexcept
      : seed_(seed),
        stream_((static_cast<std::uint64_t>(kind) << 32) | index),
        key_(detail::splitmix64(detail::splitmix64(seed) ^
                                detail::splitmix64(stream_ ^ 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    return detail::splitmix64(key_ + 0x632BE59BD9B4E019ULL * (++counter_));
  }

  // [0, 1)
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1)
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    if (lo == hi) return lo;
    return lo + (hi - lo) * uniform();
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % n;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Box-Muller, one draw per call (two uniforms consumed).
  double normal(double mean = 0.0, double stddev = 1.0) noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Inverse-CDF Laplace(0, b).
  double laplace(double scale) noexcept {
    const double u = uniform_open() - 0.5;
    const double mag = -std::log1p(-2.0 * std::fabs(u));
    return u < 0 ? -scale * mag : scale * mag;
  }

  // Exact Binomial(n, p) by summing geometric gaps between successes;
  // cost is O(n * min(p, 1 - p)).
  std::uint64_t binomial(std::uint64_t n, double p) noexcept {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    const double log_q = std::log1p(-p);
    std::uint64_t successes = 0;
    std::uint64_t pos = 0;
    for (;;) {
      const double gap = std::floor(std::log(uniform_open()) / log_q);
      if (gap >= static_cast<double>(n - pos)) break;
      pos += static_cast<std::uint64_t>(gap) + 1;
      ++successes;
      if (pos >= n) break;
    }
    return successes;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace asms
