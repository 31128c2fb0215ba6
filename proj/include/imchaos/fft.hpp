// Iterative radix-2 complex FFT. Grids in this project are powers of two,
// which keeps the transform dependency-free.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "imchaos/util.hpp"

namespace imchaos {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place FFT; sign=-1 gives sum f_j e^{-2pi i jk/n} (forward), sign=+1 the
/// unnormalised inverse.
inline void fft_inplace(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  IMCHAOS_REQUIRE(is_power_of_two(n), ErrorCode::NonUniformGrid,
                  "FFT size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * kTwoPi / static_cast<double>(len);
    const Complex wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const Complex u = a[i + j];
        const Complex v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

/// Circle DFT with the project convention fhat(k) = sum_j f(theta_j)
/// e^{-ik theta_j} * (2pi/m) on the uniform grid theta_j = 2pi j/m.
/// Returned index order matches FFT bins: k = 0..m/2-1, then k = -m/2..-1.
inline std::vector<Complex> circle_dft(const std::vector<Complex>& f) {
  std::vector<Complex> a = f;
  fft_inplace(a, -1);
  const double scale = kTwoPi / static_cast<double>(f.size());
  for (Complex& z : a) z *= scale;
  return a;
}

/// Inverse of circle_dft.
inline std::vector<Complex> circle_idft(const std::vector<Complex>& fhat) {
  std::vector<Complex> a = fhat;
  fft_inplace(a, +1);
  const double scale = 1.0 / kTwoPi;
  for (Complex& z : a) z *= scale;
  return a;
}

/// Signed frequency of FFT bin index.
inline int fft_bin_frequency(std::size_t bin, std::size_t n) {
  return bin < n / 2 ? static_cast<int>(bin)
                     : static_cast<int>(bin) - static_cast<int>(n);
}

}  // namespace imchaos
