// Exponent fits: tail exponent of |mu(f)|, Besov regularity exponent, and the
// critical-limit variance trajectory.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "imchaos/chaos.hpp"
#include "imchaos/model.hpp"
#include "imchaos/moments.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/quad.hpp"
#include "imchaos/spectral.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

// ---------------------------------------------------------------------------
// Tail exponent: slope of log(-log P(|mu_n(f)| > lambda)) against log lambda
// over the empirical upper tail.

struct TailFitReport {
  double exponent = 0.0;
  double ci_halfwidth = 0.0;  // jackknife over replica blocks
  std::size_t replicas = 0;
  std::size_t exceedances_top = 0;
  std::vector<double> lambda_grid, logneglogp;
};

/// Fits on quantile levels between q_lo and q_hi (fractions of the sample in
/// the tail). Throws InsufficientTail when the top level has < 100 points.
inline TailFitReport tail_fit_from_samples(std::vector<double> magnitudes,
                                           double q_hi = 1e-1, double q_lo = 1e-4,
                                           int n_levels = 12) {
  TailFitReport rep;
  rep.replicas = magnitudes.size();
  std::sort(magnitudes.begin(), magnitudes.end());
  const auto n = magnitudes.size();
  rep.exceedances_top = static_cast<std::size_t>(q_lo * static_cast<double>(n));
  IMCHAOS_REQUIRE(rep.exceedances_top >= 100, ErrorCode::InsufficientTail,
                  "fewer than 100 exceedances at the top threshold");
  std::vector<double> xs, ys;
  for (int i = 0; i < n_levels; ++i) {
    const double logq = std::log(q_hi) +
                        (std::log(q_lo) - std::log(q_hi)) * i / (n_levels - 1);
    const double q = std::exp(logq);
    const double lam = quantile_sorted(magnitudes, 1.0 - q);
    if (lam <= 0) continue;
    xs.push_back(std::log(lam));
    ys.push_back(std::log(-std::log(q)));
    rep.lambda_grid.push_back(lam);
    rep.logneglogp.push_back(ys.back());
  }
  rep.exponent = theil_sen_slope(xs, ys);

  // jackknife over 20 blocks for a rough CI
  const std::size_t blocks = 20;
  std::vector<double> loo;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<double> sub;
    sub.reserve(n - n / blocks);
    for (std::size_t i = 0; i < n; ++i)
      if (i % blocks != b) sub.push_back(magnitudes[i]);
    std::vector<double> xs2, ys2;
    for (int i = 0; i < n_levels; ++i) {
      const double logq = std::log(q_hi) +
                          (std::log(q_lo) - std::log(q_hi)) * i / (n_levels - 1);
      const double q = std::exp(logq);
      const double lam = quantile_sorted(sub, 1.0 - q);
      if (lam <= 0) continue;
      xs2.push_back(std::log(lam));
      ys2.push_back(std::log(-std::log(q)));
    }
    loo.push_back(theil_sen_slope(xs2, ys2));
  }
  const auto st = sample_stats(loo);
  rep.ci_halfwidth = 2.0 * st.stderr_of_mean * static_cast<double>(blocks - 1) /
                     std::sqrt(static_cast<double>(blocks));
  return rep;
}

/// Samples |mu_n(f)| on the circle and fits the tail exponent.
inline TailFitReport tail_fit_circle(int n_modes, std::size_t grid, double beta,
                                     const TestFunction& f, std::size_t replicas,
                                     std::uint64_t seed, int workers) {
  std::vector<double> mags(replicas);
  CirclePairingSampler sampler{circle_fourier_scheme(n_modes), grid, beta};
  sampler.run(seed, replicas, workers,
              [&](std::size_t r, const std::vector<Complex>& chaos,
                  const std::vector<double>& angles) {
                mags[r] = std::abs(circle_quadrature(chaos, angles, f));
              });
  return tail_fit_from_samples(std::move(mags));
}

// ---------------------------------------------------------------------------
// Regularity fit: Besov exponent from dyadic block norms plus the total
// variation proxy across truncation levels.

struct RegularityReport {
  double s_star = 0.0;        // -(median block-norm slope)
  double tv_slope = 0.0;      // slope of log TV against log(1/c_n)
  std::vector<double> tv_values;
  std::vector<int> tv_levels;
  std::size_t replicas = 0;
};

/// Median over replicas of the log2 sup-block-norm slope; grid 2^m angles,
/// scheme resolution beyond the grid Nyquist.
inline RegularityReport regularity_fit(double beta, std::size_t grid, int n_modes,
                                       std::size_t replicas, int j_lo, int j_hi,
                                       std::uint64_t seed, int workers) {
  require_uniform_pow2(grid);
  IMCHAOS_REQUIRE(static_cast<std::size_t>(n_modes) >= grid / 2,
                  ErrorCode::ConfigError, "scheme must resolve beyond grid Nyquist");
  RegularityReport rep;
  rep.replicas = replicas;
  const auto scheme = circle_fourier_scheme(n_modes);
  const double comp = std::exp(0.5 * beta * beta * scheme.variance());

  std::vector<double> slopes(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    Rng rng(seed, r);
    const auto modes = draw_circle_modes(scheme.n_modes, rng);
    // direct spectral synthesis of the field on the grid: modes above the
    // Nyquist fold back, which mirrors sampling the exact field pointwise
    thread_local std::vector<Complex> spec, chaos;
    spec.assign(grid, Complex(0, 0));
    const double sqrt2 = std::sqrt(2.0);
    for (int k = 1; k <= scheme.n_modes; ++k) {
      const std::size_t bin = static_cast<std::size_t>(k) % grid;
      spec[bin] += sqrt2 / std::sqrt(static_cast<double>(k)) * modes[k - 1];
    }
    fft_inplace(spec, +1);
    chaos.resize(grid);
    for (std::size_t j = 0; j < grid; ++j)
      chaos[j] = comp * std::polar(1.0, beta * spec[j].real());
    const auto blocks =
        besov_block_norms(chaos, std::numeric_limits<double>::infinity());
    std::vector<double> xs, ys;
    for (const auto& b : blocks)
      if (b.j >= j_lo && b.j <= j_hi && b.norm > 0) {
        xs.push_back(b.j);
        ys.push_back(std::log2(b.norm));
      }
    slopes[r] = theil_sen_slope(xs, ys);
  });
  rep.s_star = -median(slopes);

  // TV proxy: int |mu_n| = 2 pi exp((beta^2/2) H_n), fitted over levels
  std::vector<double> xs, ys;
  for (int lvl : {64, 128, 256, 512, 1024}) {
    const double tv = kTwoPi * std::exp(0.5 * beta * beta * harmonic_number(lvl));
    rep.tv_levels.push_back(lvl);
    rep.tv_values.push_back(tv);
    xs.push_back(std::log(static_cast<double>(lvl)));  // = log(1/c_n)
    ys.push_back(std::log(tv));
  }
  rep.tv_slope = theil_sen_slope(xs, ys);
  return rep;
}

// ---------------------------------------------------------------------------
// Critical limit scan (quadrature only).

struct CriticalScanPoint {
  double beta = 0.0;
  double scaled_second_moment = 0.0;  // (d - b^2)/|S^{d-1}| E|mu(f)|^2
  double target = 0.0;                // int |f|^2 e^{b^2 g(x,x)}
  double ratio = 0.0;
  double scaled_mixed = 0.0;          // (d - b^2)/|S^{d-1}| |E mu(f)^2|
};

struct CriticalScanReport {
  std::vector<CriticalScanPoint> points;
  bool monotone = false;
  bool final_within_5pct = false;
  bool mixed_small = false;
};

namespace detail {

/// E|mu_beta(f)|^2 with the limit kernel e^{b2 g} dist^{-b2}: inner metric
/// ball integrated with the smooth factor frozen at the centre (second-order
/// accurate), outer part in log-radial coordinates.
inline double limit_second_moment(const LogCorrelatedModel& model,
                                  const TestFunction& f, double beta, double h) {
  const double b2 = beta * beta;
  if (model.dimension == 1) {
    // inner window in the angle variable: chord < h  <=>  |delta| < w;
    // graded substitution t = s^{1/(1-b2)} flattens the endpoint singularity
    // even at b2 close to one
    const double w = 2.0 * std::asin(0.5 * h);
    const double p = 1.0 / (1.0 - b2);
    const auto ring_half = integrate_1d(
        [b2, p](double s) {
          const double t = std::pow(s, p);
          const double psi = t < 1e-12 ? 1.0 : 2.0 * std::sin(0.5 * t) / t;
          return p * std::pow(psi, -b2);
        },
        0.0, std::pow(w, 1.0 - b2), 1e-10);
    const QuadResult ring{2.0 * ring_half.value, 2.0 * ring_half.error,
                          ring_half.evals, ring_half.converged};
    const auto inner = integrate_1d(
        [&](double th) { return sqr(f(Vec2{th, 0.0})); }, 0.0, kTwoPi, 1e-9);
    // outer: log-radial in the angle difference
    auto outer_f = [&](const std::vector<double>& u) {
      const double delta = std::exp(u[1]);
      const Vec2 x{u[0], 0.0}, y{u[0] + delta, 0.0};
      const double fx = f(x), fy = f(y);
      const double chord = 2.0 * std::sin(0.5 * delta);
      return 2.0 * fx * fy * std::pow(chord, -b2) * delta;  // both signs of delta
    };
    const auto outer =
        genz_malik(outer_f, {0.0, std::log(w)}, {kTwoPi, std::log(kPi)}, 1e-6, 0.0,
                   4000000);
    return inner.value * ring.value + outer.value;
  }
  // planar: inner ball radius h, Euclidean metric
  const double ring = kTwoPi * std::pow(h, 2.0 - b2) / (2.0 - b2);
  const Vec2 c = f.center;
  const double R = f.support_radius;
  auto inner_f = [&](const std::vector<double>& u) {
    const Vec2 x{u[0], u[1]};
    if (!model.inside(x)) return 0.0;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return fx * fx * std::exp(b2 * model.g_diag(x));
  };
  const auto inner = genz_malik(inner_f, {c[0] - R, c[1] - R}, {c[0] + R, c[1] + R},
                                1e-7, 0.0, 2000000);
  auto outer_f = [&](const std::vector<double>& u) {
    const double rho = std::exp(u[2]);
    const Vec2 x{u[0], u[1]};
    if (!model.inside(x)) return 0.0;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    const Vec2 y{x[0] + rho * std::cos(u[3]), x[1] + rho * std::sin(u[3])};
    if (!model.inside(y)) return 0.0;
    const double fy = f(y);
    if (fy == 0.0) return 0.0;
    // rho^{-b2} * rho drho dphi, with drho = rho du
    return fx * fy * std::exp(b2 * model.g(x, y)) * std::pow(rho, 2.0 - b2);
  };
  const double diam = model.domain == Domain::UnitDisc ? 2.0 : std::sqrt(2.0);
  const auto outer =
      genz_malik(outer_f, {c[0] - R, c[1] - R, std::log(h), 0.0},
                 {c[0] + R, c[1] + R, std::log(diam), kTwoPi}, 1e-5, 0.0, 6000000);
  return inner.value * ring + outer.value;
}

inline double limit_mixed_moment(const LogCorrelatedModel& model, const TestFunction& f,
                                 double beta) {
  const double b2 = beta * beta;
  if (model.dimension == 1) {
    auto g2 = [&](const std::vector<double>& u) {
      const Vec2 x{u[0], 0.0}, y{u[1], 0.0};
      const double fx = f(x), fy = f(y);
      if (fx == 0.0 || fy == 0.0) return 0.0;
      return fx * fy * std::pow(2.0 * std::abs(std::sin(0.5 * (u[0] - u[1]))), b2);
    };
    return genz_malik(g2, {0.0, 0.0}, {kTwoPi, kTwoPi}, 1e-6, 0.0, 2000000).value;
  }
  const Vec2 c = f.center;
  const double R = f.support_radius;
  auto g4 = [&](const std::vector<double>& u) {
    const Vec2 x{u[0], u[1]}, y{u[2], u[3]};
    if (!model.inside(x) || !model.inside(y)) return 0.0;
    const double fx = f(x), fy = f(y);
    if (fx == 0.0 || fy == 0.0) return 0.0;
    return fx * fy * std::exp(-b2 * model.g(x, y)) * std::pow(dist2d(x, y), b2);
  };
  return genz_malik(g4, {c[0] - R, c[1] - R, c[0] - R, c[1] - R},
                    {c[0] + R, c[1] + R, c[0] + R, c[1] + R}, 1e-5, 0.0, 4000000)
      .value;
}

}  // namespace detail

/// Variance trajectory toward the critical point. beta_list should increase
/// toward sqrt(d); PASS requires |ratio - 1| shrinking monotonically with the
/// final deviation below 5%, and the scaled mixed moment below 10% of the
/// scaled absolute one at the last beta.
inline CriticalScanReport critical_limit_scan(const LogCorrelatedModel& model,
                                              const TestFunction& f,
                                              const std::vector<double>& beta_list,
                                              double h = 0.05) {
  CriticalScanReport rep;
  const double d = model.dimension;
  const double sphere = d == 1 ? 2.0 : kTwoPi;
  for (double beta : beta_list) {
    IMCHAOS_REQUIRE(beta * beta < d, ErrorCode::QuadratureDivergence,
                    "beta^2 must stay below d");
    CriticalScanPoint pt;
    pt.beta = beta;
    const double b2 = beta * beta;
    const double m2 = detail::limit_second_moment(model, f, beta, h);
    pt.scaled_second_moment = (d - b2) / sphere * m2;
    // target: int |f|^2 e^{b2 g(x,x)}
    if (model.dimension == 1) {
      pt.target = integrate_1d([&](double th) { return sqr(f(Vec2{th, 0.0})); }, 0.0,
                               kTwoPi, 1e-9)
                      .value;
    } else {
      const Vec2 c = f.center;
      const double R = f.support_radius;
      pt.target = genz_malik(
                      [&](const std::vector<double>& u) {
                        const Vec2 x{u[0], u[1]};
                        if (!model.inside(x)) return 0.0;
                        const double fx = f(x);
                        return fx * fx * std::exp(b2 * model.g_diag(x));
                      },
                      {c[0] - R, c[1] - R}, {c[0] + R, c[1] + R}, 1e-7, 0.0, 2000000)
                      .value;
    }
    pt.ratio = pt.scaled_second_moment / pt.target;
    pt.scaled_mixed = (d - b2) / sphere * std::abs(detail::limit_mixed_moment(model, f, beta));
    rep.points.push_back(pt);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (std::abs(rep.points[i].ratio - 1.0) >
        std::abs(rep.points[i - 1].ratio - 1.0) + 1e-3)
      rep.monotone = false;
  rep.final_within_5pct = std::abs(rep.points.back().ratio - 1.0) < 0.05;
  rep.mixed_small = rep.points.back().scaled_mixed <
                    0.10 * rep.points.back().scaled_second_moment;
  return rep;
}

}  // namespace imchaos
