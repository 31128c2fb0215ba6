// Sine-Gordon reweighted expectations: importance sampling of
// E_GFF[ F(.) e^{<cos beta X, psi>} ] / E_GFF[ e^{<cos beta X, psi>} ].
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "imchaos/chaos.hpp"
#include "imchaos/field.hpp"
#include "imchaos/testfunc.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

struct SineGordonSpec {
  TestFunction psi;
  double beta = 0.0;  // in (0, sqrt(2))
};

struct SineGordonResult {
  double estimate = 0.0;
  double stderr_ = 0.0;       // jackknife over replica blocks
  double ess = 0.0;           // (sum w)^2 / sum w^2
  double mean_weight = 0.0;   // estimate of Z(psi, beta)
  std::size_t replicas = 0;
};

/// The observable maps (chaos field, cell area) to a real number; it must be
/// bounded for the reweighted expectation to be well posed.
using ChaosObservable = std::function<double(const ChaosField&, double)>;

/// Importance-sampling estimate over GFF replicas drawn from `sampler` on a
/// fixed planar grid with the given cell area.
inline SineGordonResult sine_gordon_expect(const MollifiedGaussianSampler& sampler,
                                           const SineGordonSpec& spec,
                                           const ChaosObservable& observable,
                                           double cell_area, std::size_t replicas,
                                           std::uint64_t seed, int workers) {
  IMCHAOS_REQUIRE(spec.beta > 0 && spec.beta < std::sqrt(2.0), ErrorCode::BetaOutOfRange,
                  "sine-Gordon beta must lie in (0, sqrt(2))");
  std::vector<double> weights(replicas), fvalues(replicas);
  const auto& grid = sampler.grid();
  parallel_for(replicas, workers, [&](std::size_t r) {
    Rng rng(seed, r);
    thread_local std::vector<double> x;
    sampler.draw(rng, x);
    ChaosField chaos;
    chaos.domain = sampler.model().domain;
    chaos.dimension = 2;
    chaos.beta = spec.beta;
    chaos.grid = grid;
    chaos.variance_profile = sampler.variance_profile();
    chaos.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      chaos.values[i] = std::polar(
          std::exp(0.5 * spec.beta * spec.beta * chaos.variance_profile[i]),
          spec.beta * x[i]);
    const double q = cosine_pair(chaos, spec.psi, cell_area);
    weights[r] = std::exp(q);
    fvalues[r] = observable(chaos, cell_area);
  });

  SineGordonResult res;
  res.replicas = replicas;
  double sw = 0, sw2 = 0, swf = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    sw += weights[r];
    sw2 += weights[r] * weights[r];
    swf += weights[r] * fvalues[r];
  }
  res.ess = sw * sw / sw2;
  IMCHAOS_REQUIRE(res.ess >= 50.0, ErrorCode::DegenerateWeights,
                  "effective sample size below 50");
  res.estimate = swf / sw;
  res.mean_weight = sw / static_cast<double>(replicas);

  // jackknife over 20 contiguous blocks for the ratio estimator
  const std::size_t blocks = std::min<std::size_t>(20, replicas);
  std::vector<double> loo;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = replicas * b / blocks, hi = replicas * (b + 1) / blocks;
    double bw = 0, bwf = 0;
    for (std::size_t r = lo; r < hi; ++r) {
      bw += weights[r];
      bwf += weights[r] * fvalues[r];
    }
    if (sw - bw > 0) loo.push_back((swf - bwf) / (sw - bw));
  }
  // delete-one-block jackknife: SE^2 = (B-1)/B * sum (theta_b - mean)^2
  const auto st = sample_stats(loo);
  res.stderr_ = st.stderr_of_mean * static_cast<double>(loo.size() - 1);
  return res;
}

}  // namespace imchaos
