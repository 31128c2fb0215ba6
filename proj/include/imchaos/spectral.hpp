// Discrete Sobolev norms and Littlewood-Paley block norms on uniform circle
// grids. Sharp Fourier cutoffs stand in for the smooth dyadic partition; on
// the circle the norms are equivalent at the accuracy of an exponent fit.
#pragma once

#include <cmath>
#include <vector>

#include "imchaos/fft.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

inline void require_uniform_pow2(std::size_t m) {
  IMCHAOS_REQUIRE(is_power_of_two(m), ErrorCode::NonUniformGrid,
                  "needs a uniform angular grid of size 2^m");
}

/// Discrete H^s norm squared: sum_k (1+k^2)^s |fhat(k)|^2 over the resolved
/// modes, with fhat(k) = sum_j f(theta_j) e^{-ik theta_j} (2 pi / m).
inline double sobolev_norm_sq(const std::vector<Complex>& f, double s) {
  require_uniform_pow2(f.size());
  const auto fhat = circle_dft(f);
  double acc = 0.0;
  for (std::size_t bin = 0; bin < fhat.size(); ++bin) {
    const int k = fft_bin_frequency(bin, fhat.size());
    acc += std::pow(1.0 + static_cast<double>(k) * k, s) * std::norm(fhat[bin]);
  }
  return acc;
}

inline double sobolev_norm_sq(const std::vector<double>& f, double s) {
  std::vector<Complex> z(f.begin(), f.end());
  return sobolev_norm_sq(z, s);
}

struct BesovBlock {
  int j = 0;           // dyadic index
  double norm = 0.0;   // L^p norm of the block piece on the grid
};

/// Per-block L^p norms of the sharp Littlewood-Paley pieces. Block j=0 keeps
/// |k| <= 1; block j>=1 keeps 2^j <= |k| < 2^{j+1}. p = inf means the sup.
inline std::vector<BesovBlock> besov_block_norms(const std::vector<Complex>& f,
                                                 double p) {
  const std::size_t m = f.size();
  require_uniform_pow2(m);
  std::vector<Complex> fhat = circle_dft(f);
  const int kmax = static_cast<int>(m / 2);
  int jmax = 0;
  while ((2 << jmax) <= kmax) ++jmax;  // blocks j = 0 .. jmax

  std::vector<BesovBlock> out;
  const double cell = kTwoPi / static_cast<double>(m);
  for (int j = 0; j <= jmax; ++j) {
    const int lo = j == 0 ? 0 : (1 << j);
    const int hi = j == 0 ? 1 : std::min((1 << (j + 1)) - 1, kmax);
    std::vector<Complex> piece(m, Complex(0, 0));
    for (std::size_t bin = 0; bin < m; ++bin) {
      const int k = std::abs(fft_bin_frequency(bin, m));
      if (k >= lo && k <= hi) piece[bin] = fhat[bin];
    }
    const auto values = circle_idft(piece);
    double norm = 0.0;
    if (std::isinf(p)) {
      for (const Complex& v : values) norm = std::max(norm, std::abs(v));
    } else {
      double acc = 0.0;
      for (const Complex& v : values) acc += std::pow(std::abs(v), p) * cell;
      norm = std::pow(acc, 1.0 / p);
    }
    out.push_back({j, norm});
  }
  return out;
}

inline std::vector<BesovBlock> besov_block_norms(const std::vector<double>& f,
                                                 double p) {
  std::vector<Complex> z(f.begin(), f.end());
  return besov_block_norms(z, p);
}

}  // namespace imchaos
