#pragma once

#include <cmath>
#include <cstdint>

namespace jumpflow {

namespace detail {

// SplitMix64 step; used only for state derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Deterministic substream generator.  substream (seed, i) and (seed, j) are
/// statistically independent for i != j, and a given (seed, i) reproduces the
/// same sequence on every run and thread count.  The state is derived by
/// golden-ratio spacing of the stream index through SplitMix64, then used as a
/// xoshiro256** generator.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_index) {
    std::uint64_t d = seed ^ (0xD1B54A32D192ED03ULL + stream_index * 0x9E3779B97F4A7C15ULL);
    s_[0] = detail::splitmix64(d);
    s_[1] = detail::splitmix64(d);
    s_[2] = detail::splitmix64(d);
    s_[3] = detail::splitmix64(d);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x2545F4914F6CDD1DULL;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform01();
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 6.28318530717958647692 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace jumpflow
