// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace hybeam {

// Deterministic random stream used everywhere randomness is needed.
// Engine: std::mt19937_64 (bit-portable per the standard). All variates are
// derived from explicit 53-bit uniforms so the stream does not depend on the
// standard library's distribution implementations: the same seed reproduces
// the same sequence on any platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform angle on [0, 2*pi).
  double angle() { return 2.0 * std::numbers::pi * uniform(); }

  /// Circularly-symmetric complex Gaussian, zero mean, unit variance.
  /// Box-Muller in polar form: radius sqrt(-ln u1), phase 2*pi*u2.
  std::complex<double> complex_gaussian() {
    const double radius = std::sqrt(-std::log(uniform_open()));
    const double phase = angle();
    return std::polar(radius, phase);
  }

  /// Real standard normal (one Box-Muller branch).
  double gaussian() {
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    return radius * std::cos(angle());
  }

  /// Raw engine output, for integer draws in tests.
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hybeam
