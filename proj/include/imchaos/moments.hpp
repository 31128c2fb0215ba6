// Moment estimators for the chaos pairing: deterministic quadrature of the
// 2N-point ratio-of-kernels integral (N <= 2) and randomised QMC with
// importance reweighting of the diagonal singularities (N <= 6).
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "imchaos/model.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/quad.hpp"
#include "imchaos/testfunc.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

struct MomentEstimate {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

namespace detail {

/// Ratio-of-kernels integrand over x_1..x_N, y_1..y_N (value, not log):
///   prod f(x) f(y) * exp(beta^2 G) * prod_{i<j} [d_xx d_yy]^{b2}
///   / prod_{ij} d_xy^{b2}
/// with G = sum_{ij} g(x_i,y_j) - sum_{i<j} (g(x_i,x_j)+g(y_i,y_j)).
/// Matched pairs (x_j, y_j) enter through caller-provided chord ratios, so the
/// |r_j|^{-b2} part can be cancelled against the substitution Jacobian.
inline double moment_ratio_integrand(const LogCorrelatedModel& model, double beta,
                                     const std::vector<Vec2>& xs,
                                     const std::vector<Vec2>& ys,
                                     const TestFunction& f,
                                     const std::vector<double>& matched_ratio_pow) {
  const double b2 = beta * beta;
  const std::size_t N = xs.size();
  double fprod = 1.0;
  for (const Vec2& x : xs) {
    const double v = f(x);
    if (v == 0.0) return 0.0;
    fprod *= v;
  }
  for (const Vec2& y : ys) {
    if (!model.inside(y)) return 0.0;
    const double v = f(y);
    if (v == 0.0) return 0.0;
    fprod *= v;
  }
  double logacc = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) {
      const double dxx = model.dist(xs[i], xs[j]);
      const double dyy = model.dist(ys[i], ys[j]);
      if (dxx < 1e-300 || dyy < 1e-300) return 0.0;  // measure-zero collision
      logacc += b2 * (std::log(dxx) + std::log(dyy));
      logacc -= b2 * (model.g(xs[i], xs[j]) + model.g(ys[i], ys[j]));
    }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      logacc += b2 * model.g(xs[i], ys[j]);
      if (i == j) continue;  // matched pair handled via matched_ratio_pow
      const double dxy = model.dist(xs[i], ys[j]);
      if (dxy < 1e-300) return 1e300;  // integrable cross singularity
      logacc -= b2 * std::log(dxy);
    }
  double out = fprod * std::exp(logacc);
  for (double m : matched_ratio_pow) out *= m;
  return out;
}

inline bool in_matched_region(const LogCorrelatedModel& model, const std::vector<Vec2>& xs,
                              const std::vector<Vec2>& ys) {
  // identity matching minimises the sum of squared distances (N = 2 case)
  const double matched = sqr(model.dist(xs[0], ys[0])) + sqr(model.dist(xs[1], ys[1]));
  const double crossed = sqr(model.dist(xs[0], ys[1])) + sqr(model.dist(xs[1], ys[0]));
  return matched <= crossed;
}

}  // namespace detail

/// Deterministic quadrature of E |mu(f)|^{2N} for N in {0,1,2}. The matched
/// diagonals are removed by a graded radial substitution; N=2 restricts to the
/// region where the identity matching is closest (times N!). Dimensions up to
/// four use adaptive Genz-Malik; the 8-dim planar N=2 case uses the embedded
/// lattice rule.
inline MomentEstimate exact_moment_2N(const LogCorrelatedModel& model,
                                      const TestFunction& f, double beta, int N,
                                      std::size_t budget = 4000000) {
  IMCHAOS_REQUIRE(N >= 0 && N <= 2, ErrorCode::ConfigError, "exact moments need N <= 2");
  IMCHAOS_REQUIRE(beta > 0 && beta * beta < model.dimension, ErrorCode::BetaOutOfRange,
                  "beta^2 < d required");
  MomentEstimate est;
  if (N == 0) {
    est.value = 1.0;
    est.converged = true;
    return est;
  }
  const double b2 = beta * beta;

  if (model.domain == Domain::Circle) {
    const double p = 1.0 / (1.0 - b2);
    const double smax = std::pow(kPi, 1.0 - b2);
    auto chord_ratio_pow = [&](double r) {
      // (d(x,y)/|r|)^{-b2} with chordal metric 2|sin(r/2)|
      const double ar = std::abs(r);
      if (ar < 1e-12) return 1.0;
      return std::pow(2.0 * std::sin(0.5 * ar) / ar, -b2);
    };
    auto graded = [&](double s, double& r, double& jac) {
      const double as = std::abs(s);
      r = (s < 0 ? -1.0 : 1.0) * std::pow(as, p);
      jac = p;  // |s|^{p-1} * |r|^{-b2} == 1 by construction
    };
    if (N == 1) {
      auto integrand = [&](const std::vector<double>& u) {
        double r, jac;
        graded(u[1], r, jac);
        const Vec2 x{u[0], 0.0}, y{u[0] + r, 0.0};
        const double fx = f(x), fy = f(y);
        if (fx == 0.0 || fy == 0.0) return 0.0;
        return fx * fy * chord_ratio_pow(r) * jac;
      };
      const auto q = genz_malik(integrand, {0.0, -smax}, {kTwoPi, smax}, 1e-4, 0.0, budget);
      est = {q.value, q.error, q.evals, q.converged};
      return est;
    }
    // N == 2
    auto integrand = [&](const std::vector<double>& u) {
      double r1, j1, r2, j2;
      graded(u[2], r1, j1);
      graded(u[3], r2, j2);
      const std::vector<Vec2> xs{{u[0], 0.0}, {u[1], 0.0}};
      const std::vector<Vec2> ys{{u[0] + r1, 0.0}, {u[1] + r2, 0.0}};
      if (!detail::in_matched_region(model, xs, ys)) return 0.0;
      const double v = detail::moment_ratio_integrand(
          model, beta, xs, ys, f, {chord_ratio_pow(r1), chord_ratio_pow(r2)});
      return 2.0 * v * j1 * j2;  // N! copies of the matched region
    };
    const auto q = genz_malik(integrand, {0.0, 0.0, -smax, -smax},
                              {kTwoPi, kTwoPi, smax, smax}, 1e-3, 0.0, budget);
    est = {q.value, q.error, q.evals, q.converged};
    return est;
  }

  // planar domains
  const double qexp = 1.0 / (2.0 - b2);
  const double diam = model.domain == Domain::UnitDisc ? 2.0 : std::sqrt(2.0);
  const double tmax = std::pow(diam, 2.0 - b2);
  const Vec2 c = f.center;
  const double R = f.support_radius;
  const std::vector<double> xlo{c[0] - R, c[1] - R}, xhi{c[0] + R, c[1] + R};

  if (N == 1) {
    // polar x around the support centre handles the steep bump edge much
    // better than box coordinates; y offsets stay within the support diameter
    const double t_sup = std::pow(std::min(diam, 2.0 * R), 2.0 - b2);
    auto integrand = [&](const std::vector<double>& u) {
      const double rx = u[0], psi = u[1];
      const Vec2 x{c[0] + rx * std::cos(psi), c[1] + rx * std::sin(psi)};
      if (!model.inside(x)) return 0.0;
      const double fx = f(x);
      if (fx == 0.0) return 0.0;
      const double rho = std::pow(u[2], qexp);
      const Vec2 y{x[0] + rho * std::cos(u[3]), x[1] + rho * std::sin(u[3])};
      if (!model.inside(y)) return 0.0;
      const double fy = f(y);
      if (fy == 0.0) return 0.0;
      // rho^{1-b2} d rho = qexp dt, and the kernel supplies rho^{-b2}
      return fx * fy * std::exp(b2 * model.g(x, y)) * qexp * rx;
    };
    const auto q = genz_malik(integrand, {0.0, 0.0, 0.0, 0.0},
                              {R, kTwoPi, t_sup, kTwoPi}, 1e-4, 0.0, budget);
    est = {q.value, q.error, q.evals, q.converged};
    // the contract is an a-posteriori error estimate below 1%
    est.converged = est.error <= 0.01 * std::abs(est.value);
    return est;
  }

  // planar N == 2: 8-dim, deterministic lattice rule with embedded estimate
  auto integrand8 = [&](const std::vector<double>& u) {
    const Vec2 x1{xlo[0] + (xhi[0] - xlo[0]) * u[0], xlo[1] + (xhi[1] - xlo[1]) * u[1]};
    const Vec2 x2{xlo[0] + (xhi[0] - xlo[0]) * u[2], xlo[1] + (xhi[1] - xlo[1]) * u[3]};
    if (!model.inside(x1) || !model.inside(x2)) return 0.0;
    const double t1 = u[4] * tmax, phi1 = u[5] * kTwoPi;
    const double t2 = u[6] * tmax, phi2 = u[7] * kTwoPi;
    const double rho1 = std::pow(t1, qexp), rho2 = std::pow(t2, qexp);
    const std::vector<Vec2> xs{x1, x2};
    const std::vector<Vec2> ys{{x1[0] + rho1 * std::cos(phi1), x1[1] + rho1 * std::sin(phi1)},
                               {x2[0] + rho2 * std::cos(phi2), x2[1] + rho2 * std::sin(phi2)}};
    if (!detail::in_matched_region(model, xs, ys)) return 0.0;
    // matched-pair kernel factors rho^{-b2} cancel against the graded
    // substitution, leaving the flat Jacobian qexp per pair
    const double v = detail::moment_ratio_integrand(model, beta, xs, ys, f, {1.0, 1.0});
    if (v == 0.0 || v >= 1e300) return 0.0;
    const double cell = sqr((xhi[0] - xlo[0]) * (xhi[1] - xlo[1])) * sqr(tmax * kTwoPi);
    return 2.0 * v * sqr(qexp) * cell;
  };
  const auto q = lattice_rule(integrand8, 8, budget > 2000000 ? 2000000 : budget);
  est = {q.value, q.error, q.evals, true};
  est.converged = est.error < 0.02 * std::abs(est.value) + 1e-12;
  return est;
}

// ---------------------------------------------------------------------------
// Randomised QMC estimator with mixture importance sampling of the y points.

struct QmcMomentReport {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t points = 0;
  int replicates = 0;
  int N = 0;
};

/// E |mu(f)|^{2N} via shifted-Halton points; each y_j is drawn from the
/// mixture (1/N) sum_i p(dist to x_i) which cancels every cross singularity
/// in the denominator. Dimension 2Nd <= 24.
inline QmcMomentReport qmc_moment_2N(const LogCorrelatedModel& model,
                                     const TestFunction& f, double beta, int N,
                                     std::size_t n_points, std::uint64_t seed,
                                     int replicates = 16, int workers = 1) {
  IMCHAOS_REQUIRE(N >= 0 && N <= 6, ErrorCode::ConfigError, "qmc moments need N <= 6");
  const int d = model.dimension;
  IMCHAOS_REQUIRE(2 * N * d <= 24, ErrorCode::ConfigError, "dimension 2Nd <= 24");
  QmcMomentReport rep;
  rep.N = N;
  rep.replicates = replicates;
  rep.points = n_points;
  if (N == 0) {
    rep.value = 1.0;
    return rep;
  }
  const double b2 = beta * beta;
  const double rmax = model.domain == Domain::Circle ? kPi
                      : model.domain == Domain::UnitDisc ? 2.0
                                                         : std::sqrt(2.0);
  // Radial proposal p(r) propto r^{d-1-b2} on [rmin, rmax]. The floor keeps
  // sampled offsets representable in double precision (otherwise y collapses
  // onto x bitwise and the density/kernel cancellation breaks). The excluded
  // near-diagonal mass is O((rmin/rmax)^{d-b2}) relative, < 1e-2 even at
  // beta^2 = 0.81 and negligible elsewhere.
  const double rmin = 1e-12;
  const double lo_pow = std::pow(rmin, d - b2), hi_pow = std::pow(rmax, d - b2);
  auto radius_from_uniform = [&](double w) {
    return std::pow(lo_pow + w * (hi_pow - lo_pow), 1.0 / (d - b2));
  };
  auto radial_density = [&](double r) {  // w.r.t. Lebesgue in R^d
    const double pr = (d - b2) * std::pow(r, d - 1 - b2) / (hi_pow - lo_pow);
    return d == 1 ? 0.5 * pr : pr / (kTwoPi * r);
  };
  // x proposals live on the bounding box of the support of f
  const Vec2 c = f.center;
  const double R = f.support_radius;
  const double x_vol = d == 1 ? 2.0 * R : sqr(2.0 * R);

  std::vector<double> means(replicates);
  parallel_for(static_cast<std::size_t>(replicates), workers, [&](std::size_t rep_i) {
    Rng rng(seed, rep_i);
    HaltonSampler halton(static_cast<std::size_t>(2 * N * d), rng);
    std::vector<double> u;
    std::vector<Vec2> xs(N), ys(N);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
      halton.point(i + rep_i * n_points, u);
      std::size_t k = 0;
      for (int j = 0; j < N; ++j) {
        if (d == 1) {
          xs[j] = {c[0] + (2.0 * u[k++] - 1.0) * R, 0.0};
        } else {
          xs[j] = {c[0] + (2.0 * u[k] - 1.0) * R, c[1] + (2.0 * u[k + 1] - 1.0) * R};
          k += 2;
        }
      }
      for (int j = 0; j < N; ++j) {
        // pack the mixture index (and the sign for d=1) into one uniform
        double w = u[k];
        const int pick = std::min(N - 1, static_cast<int>(w * N));
        w = w * N - pick;
        double r, angle = 0.0;
        if (d == 1) {
          const double sign = w < 0.5 ? -1.0 : 1.0;
          w = w < 0.5 ? 2.0 * w : 2.0 * (w - 0.5);
          r = sign * radius_from_uniform(w);
          ys[j] = {xs[pick][0] + r, 0.0};
          k += 1;
        } else {
          angle = kTwoPi * u[k + 1];
          r = radius_from_uniform(w);
          ys[j] = {xs[pick][0] + r * std::cos(angle), xs[pick][1] + r * std::sin(angle)};
          k += 2;
        }
      }
      // collision safety net for coincidences the proposal floor cannot see
      bool separated = true;
      for (int j = 0; j < N && separated; ++j)
        for (int i2 = 0; i2 < N; ++i2) {
          const double dist = model.domain == Domain::Circle
                                  ? std::abs(std::remainder(ys[j][0] - xs[i2][0], kTwoPi))
                                  : dist2d(ys[j], xs[i2]);
          if (dist < 0.5 * rmin) {
            separated = false;
            break;
          }
        }
      if (!separated) continue;
      // mixture density of each y_j over all x_i (truncated support)
      double inv_density = 1.0;
      bool ok = true;
      for (int j = 0; j < N && ok; ++j) {
        double q = 0.0;
        for (int i2 = 0; i2 < N; ++i2) {
          const double dist = model.domain == Domain::Circle
                                  ? std::abs(std::remainder(ys[j][0] - xs[i2][0], kTwoPi))
                                  : dist2d(ys[j], xs[i2]);
          if (dist <= rmax && dist >= rmin) q += radial_density(dist);
        }
        q /= static_cast<double>(N);
        if (q <= 0) {
          ok = false;
        } else {
          inv_density /= q;
        }
      }
      if (!ok) continue;
      // x points may poke outside the domain when the support box does; the
      // integrand is zero there (f vanishes), which keeps the estimate unbiased
      bool x_ok = true;
      for (const Vec2& x : xs)
        if (!model.inside(x)) x_ok = false;
      if (!x_ok) continue;
      double val = detail::moment_ratio_integrand(model, beta, xs, ys, f,
                                                  std::vector<double>(N, 1.0));
      if (val >= 1e300) continue;  // hit an exact collision
      // matched factors were not cancelled here: put them back explicitly
      for (int j = 0; j < N; ++j) {
        const double dj = model.dist(xs[j], ys[j]);
        if (dj < 1e-300) {
          val = 0.0;
          break;
        }
        val *= std::pow(dj, -b2);
      }
      acc += val * inv_density * std::pow(x_vol, N);
    }
    means[rep_i] = acc / static_cast<double>(n_points);
  });
  const auto st = sample_stats(means);
  rep.value = st.mean;
  rep.stderr_ = st.stderr_of_mean;
  IMCHAOS_REQUIRE(rep.value == 0.0 || rep.stderr_ / std::abs(rep.value) <= 0.30,
                  ErrorCode::VarianceBlowup, "relative stderr above 30%");
  return rep;
}

// ---------------------------------------------------------------------------
// Growth fit: log E|mu(f)|^{2N} = s (N log N) + b N + lower order. Second
// differences annihilate both the O(N) slack and any constant, so
// (y_{c+1} - 2 y_c + y_{c-1}) / d2(N log N) estimates s directly; the median
// over the upper centres is reported (the smallest-N curvature carries the
// strongest finite-size contamination).

struct MomentGrowthFit {
  double slope_nlogn = 0.0;
  double slope_n = 0.0;  // median first-difference intercept
  std::vector<double> moments;       // per N = 1..Nmax
  std::vector<double> moment_stderr;
  std::vector<double> curvature_slopes;  // per centre
};

inline MomentGrowthFit moment_growth_fit(const LogCorrelatedModel& model,
                                         const TestFunction& f, double beta, int n_max,
                                         std::size_t points, std::uint64_t seed,
                                         int workers) {
  IMCHAOS_REQUIRE(n_max >= 4, ErrorCode::ConfigError, "growth fit needs N_max >= 4");
  MomentGrowthFit fit;
  std::vector<double> y;
  for (int N = 1; N <= n_max; ++N) {
    const auto rep = qmc_moment_2N(model, f, beta, N, points, seed + N, 16, workers);
    fit.moments.push_back(rep.value);
    fit.moment_stderr.push_back(rep.stderr_);
    y.push_back(std::log(rep.value));
  }
  auto u = [](int n) { return n * std::log(static_cast<double>(n)); };
  for (int c = 2; c + 1 <= n_max; ++c) {
    const double d2x = u(c + 1) - 2.0 * u(c) + u(c - 1);
    const double d2y = y[c] - 2.0 * y[c - 1] + y[c - 2];
    fit.curvature_slopes.push_back(d2y / d2x);
  }
  std::vector<double> upper(fit.curvature_slopes.begin() +
                                (fit.curvature_slopes.size() > 2 ? 1 : 0),
                            fit.curvature_slopes.end());
  fit.slope_nlogn = median(upper);
  std::vector<double> intercepts;
  for (int N = 1; N < n_max; ++N)
    intercepts.push_back(y[N] - y[N - 1] -
                         fit.slope_nlogn * (u(N + 1) - u(N)));
  fit.slope_n = median(intercepts);
  return fit;
}

}  // namespace imchaos
