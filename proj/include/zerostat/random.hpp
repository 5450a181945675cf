#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace zerostat {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Per-sample seed: mix64(mix64(master) ^ mix64(index + golden)).
///
/// A counter-based derivation, so sample i depends only on (master, i) and
/// parallel runs reproduce serial runs sample by sample.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// SplitMix64 stream with Box-Muller complex Gaussians.
class SampleStream {
public:
  explicit SampleStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1].
  double uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  /// Standard complex Gaussian: real and imaginary parts independent
  /// N(0, 1/2), so E|b|^2 = 1.
  std::complex<double> complex_gaussian() {
    const double radius = std::sqrt(-std::log(uniform()));
    const double angle = 6.283185307179586476925 * uniform();
    return std::polar(radius, angle);
  }

private:
  std::uint64_t state_;
};

} // namespace zerostat
