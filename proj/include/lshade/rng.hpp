#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <numbers>

#include "lshade/stats.hpp"

namespace lshade {

// Purpose tags for derived random streams. Every random decision draws from a
// stream keyed by (seed, generation, unit, purpose), so results do not depend
// on evaluation order or thread count.
enum class Draw : std::uint64_t {
  RunSeed = 1,
  Init,
  Select,
  SampleF,
  SampleCr,
  Cross,
  ArchiveEvict,
  Synthetic,
  Shift,
  Estimator,
  Batch,
  Test,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Keyed SplitMix64 sequence. The initial state hashes the key words, after
// which next_u64() walks the sequence.
class RngStream {
 public:
  RngStream() : state_(0x853C49E6748FEA9Bull) {}

  static RngStream derive(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0, std::uint64_t d = 0) {
    RngStream r;
    r.state_ = seed;
    r.absorb(a);
    r.absorb(b);
    r.absorb(c);
    r.absorb(d);
    return r;
  }
  static RngStream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          Draw purpose) {
    return derive(seed, a, b, c, static_cast<std::uint64_t>(purpose));
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); never returns an exact endpoint.
  double next_unit_pos() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform over {0, ..., n-1} (Lemire multiply-shift; bias < n / 2^64).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const unsigned __int128 m = (unsigned __int128)next_u64() * (unsigned __int128)n;
    return (std::uint64_t)(m >> 64);
  }

  double normal(double mu, double sigma) { return mu + sigma * norminv(next_unit_pos()); }

  double cauchy(double loc, double scale) {
    return loc + scale * std::tan(std::numbers::pi * (next_unit_pos() - 0.5));
  }

 private:
  void absorb(std::uint64_t w) {
    state_ ^= w * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull;
    (void)detail::splitmix64(state_);
  }
  std::uint64_t state_;
};

}  // namespace lshade
