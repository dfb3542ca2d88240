#pragma once

// Deterministic random streams. A stream is identified by (seed, stream_id);
// bootstrap and simulation code hands each replicate its own stream_id so
// results do not depend on scheduling.
//
// The engine is std::mt19937_64 (fully specified by the standard) seeded via
// std::seed_seq, and every distribution below is written out explicitly so
// draws are reproducible across standard library implementations.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "adjwald/error.hpp"

namespace adjwald::numkit {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Seed for a nested stream family, e.g. the bootstrap run inside outer
/// replicate `index` of a simulation (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::DomainError, what);
}
}  // namespace detail

inline double draw_uniform(RngStream& rng) { return rng.uniform(); }

// Marsaglia polar method; the spare deviate is discarded to keep the stream
// position a pure function of the number of calls.
inline double draw_normal(RngStream& rng) {
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

inline double draw_exponential(RngStream& rng, double rate = 1.0) {
  detail::require(rate > 0.0 && std::isfinite(rate), "draw_exponential requires rate > 0");
  return -std::log(rng.uniform()) / rate;
}

// Marsaglia & Tsang (2000); shape < 1 via the U^(1/shape) boost.
inline double draw_gamma(RngStream& rng, double shape, double rate = 1.0) {
  detail::require(shape > 0.0 && std::isfinite(shape), "draw_gamma requires shape > 0");
  detail::require(rate > 0.0 && std::isfinite(rate), "draw_gamma requires rate > 0");
  if (shape < 1.0) {
    const double g = draw_gamma(rng, shape + 1.0, 1.0);
    return g * std::pow(rng.uniform(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = draw_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

inline double draw_beta(RngStream& rng, double a, double b) {
  detail::require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b), "draw_beta requires a, b > 0");
  const double x = draw_gamma(rng, a);
  const double y = draw_gamma(rng, b);
  return x / (x + y);
}

inline int draw_bernoulli(RngStream& rng, double p) {
  detail::require(p >= 0.0 && p <= 1.0, "draw_bernoulli requires p in [0, 1]");
  if (p == 0.0) return 0;
  return rng.uniform() < p ? 1 : 0;
}

// Inversion by sequential search on chunks of at most 500 trials so the
// starting mass (1-p)^n never underflows.
inline long draw_binomial(RngStream& rng, long n, double p) {
  detail::require(n >= 0, "draw_binomial requires n >= 0");
  detail::require(p >= 0.0 && p <= 1.0, "draw_binomial requires p in [0, 1]");
  if (p == 0.0 || n == 0) return 0;
  if (p == 1.0) return n;
  const bool flip = p > 0.5;
  const double q = flip ? 1.0 - p : p;
  const double odds = q / (1.0 - q);
  long total = 0;
  for (long remaining = n; remaining > 0;) {
    const long m = std::min<long>(remaining, 500);
    remaining -= m;
    double pmf = std::pow(1.0 - q, static_cast<double>(m));
    double u = rng.uniform();
    long k = 0;
    while (u > pmf && k < m) {
      u -= pmf;
      pmf *= odds * static_cast<double>(m - k) / static_cast<double>(k + 1);
      ++k;
    }
    total += k;
  }
  return flip ? n - total : total;
}

// Knuth multiplication on chunks of mean <= 30.
inline long draw_poisson(RngStream& rng, double mean) {
  detail::require(mean >= 0.0 && std::isfinite(mean), "draw_poisson requires mean >= 0");
  long total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double chunk = std::min(remaining, 30.0);
    remaining -= chunk;
    const double limit = std::exp(-chunk);
    double prod = rng.uniform();
    long k = 0;
    while (prod > limit) {
      prod *= rng.uniform();
      ++k;
    }
    total += k;
  }
  return total;
}

}  // namespace adjwald::numkit
