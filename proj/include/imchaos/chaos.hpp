// Imaginary chaos approximants mu_n = exp(i beta X_n + (beta^2/2) E X_n^2),
// pairings against test functions, the universality transform H(X_n), and the
// KL martingale diagnostic.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "imchaos/field.hpp"
#include "imchaos/model.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/testfunc.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

struct ChaosField {
  Domain domain = Domain::Circle;
  int dimension = 1;
  double beta = 0.0;
  std::vector<Vec2> grid;
  std::vector<Complex> values;
  std::vector<double> variance_profile;
};

/// Pointwise exponential with exact variance compensation. beta must lie in
/// (0, sqrt(d)); the supercritical range is admitted only behind `force`
/// (used by the white-noise experiments).
inline ChaosField build_chaos(const FieldRealization& field, double beta,
                              bool force = false) {
  const double beta_max = std::sqrt(static_cast<double>(field.dimension));
  IMCHAOS_REQUIRE(force || (beta > 0.0 && beta < beta_max), ErrorCode::BetaOutOfRange,
                  "beta must lie in (0, sqrt(d)); pass force for supercritical runs");
  ChaosField c;
  c.domain = field.domain;
  c.dimension = field.dimension;
  c.beta = beta;
  c.grid = field.grid;
  c.variance_profile = field.variance_profile;
  c.values.resize(field.values.size());
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double comp = 0.5 * beta * beta * field.variance_profile[i];
    c.values[i] = std::polar(std::exp(comp), beta * field.values[i]);
  }
  return c;
}

/// Midpoint-rule weight of one grid cell. Uniform circle grids carry
/// 2 pi / m; planar grids pass their cell area explicitly via pair().
inline double circle_cell_weight(std::size_t m) { return kTwoPi / static_cast<double>(m); }

/// Quadrature of mu_n * f over the grid (midpoint rule; the chaos is rough,
/// so higher-order rules buy nothing).
inline Complex pair(const ChaosField& chaos, const TestFunction& f, double cell_weight) {
  std::size_t in_support = 0;
  Complex acc(0, 0);
  for (std::size_t i = 0; i < chaos.grid.size(); ++i) {
    const double fv = f(chaos.grid[i]);
    if (fv != 0.0) ++in_support;
    acc += fv * chaos.values[i];
  }
  // an identically-zero f pairs to zero; anything nontrivial must be resolved
  IMCHAOS_REQUIRE(f.linf == 0.0 || in_support >= 16, ErrorCode::UnresolvedSupport,
                  "grid must resolve the test function (>=16 points in support)");
  return acc * cell_weight;
}

inline double cosine_pair(const ChaosField& chaos, const TestFunction& f,
                          double cell_weight) {
  return pair(chaos, f, cell_weight).real();
}

// ---------------------------------------------------------------------------
// Circle Monte Carlo driver: replica-parallel pairings on the uniform grid.

struct CirclePairingSampler {
  CircleScheme scheme;
  std::size_t grid_size;
  double beta;

  /// One replica: shared-modes evaluation of the pairing for each f in fs.
  template <typename Fn>
  void run(std::uint64_t seed, std::size_t replicas, int workers, Fn&& per_replica) const {
    const double comp = std::exp(0.5 * beta * beta * scheme.variance());
    const auto angles = uniform_circle_grid(grid_size);
    parallel_for(replicas, workers, [&](std::size_t r) {
      thread_local std::vector<double> vals;
      thread_local std::vector<Complex> scratch, chaos;
      Rng rng(seed, r);
      const auto modes = draw_circle_modes(scheme.n_modes, rng);
      eval_circle_field_uniform(scheme, modes, grid_size, vals, scratch);
      chaos.resize(grid_size);
      for (std::size_t j = 0; j < grid_size; ++j)
        chaos[j] = comp * std::polar(1.0, beta * vals[j]);
      per_replica(r, chaos, angles);
    });
  }
};

/// Pairing of a complex grid function against f on the uniform circle grid.
inline Complex circle_quadrature(const std::vector<Complex>& values,
                                 const std::vector<double>& angles,
                                 const TestFunction& f) {
  Complex acc(0, 0);
  for (std::size_t j = 0; j < values.size(); ++j)
    acc += f(Vec2{angles[j], 0.0}) * values[j];
  return acc * circle_cell_weight(values.size());
}

// ---------------------------------------------------------------------------
// Scheme independence: E |mu_A(f) - mu_B(f)|^2 with coupled coefficients.

struct SchemePairReport {
  double distance_sq = 0.0;   // E |mu_A(f) - mu_B(f)|^2
  double reference_sq = 0.0;  // E |mu_A(f)|^2
  double stderr_distance = 0.0;
  std::size_t replicas = 0;
};

/// Both schemes are driven by the same W_k stream (same seed), realising the
/// coupling hypothesis of the uniqueness statement. Throws if seeds differ.
inline SchemePairReport pair_two_schemes(const CircleScheme& a, const CircleScheme& b,
                                         double beta, const TestFunction& f,
                                         std::size_t grid_size, std::size_t replicas,
                                         std::uint64_t seed_a, std::uint64_t seed_b,
                                         int workers) {
  IMCHAOS_REQUIRE(seed_a == seed_b, ErrorCode::UncoupledSchemes,
                  "coupled schemes must share the coefficient seed");
  const int n_max = std::max(a.n_modes, b.n_modes);
  const double comp_a = std::exp(0.5 * beta * beta * a.variance());
  const double comp_b = std::exp(0.5 * beta * beta * b.variance());
  const auto angles = uniform_circle_grid(grid_size);
  std::vector<double> dist_sq(replicas), ref_sq(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    thread_local std::vector<double> va, vb;
    thread_local std::vector<Complex> scratch, ca, cb;
    Rng rng(seed_a, r);
    const auto modes = draw_circle_modes(n_max, rng);
    eval_circle_field_uniform(a, modes, grid_size, va, scratch);
    eval_circle_field_uniform(b, modes, grid_size, vb, scratch);
    ca.resize(grid_size);
    cb.resize(grid_size);
    for (std::size_t j = 0; j < grid_size; ++j) {
      ca[j] = comp_a * std::polar(1.0, beta * va[j]);
      cb[j] = comp_b * std::polar(1.0, beta * vb[j]);
    }
    const Complex pa = circle_quadrature(ca, angles, f);
    const Complex pb = circle_quadrature(cb, angles, f);
    dist_sq[r] = std::norm(pa - pb);
    ref_sq[r] = std::norm(pa);
  });
  SchemePairReport rep;
  const auto sd = sample_stats(dist_sq);
  rep.distance_sq = sd.mean;
  rep.stderr_distance = sd.stderr_of_mean;
  rep.reference_sq = sample_stats(ref_sq).mean;
  rep.replicas = replicas;
  return rep;
}

// ---------------------------------------------------------------------------
// Universality transform: H(x) = sum_{k>=1} hk cos(k beta x), mean zero and
// even by construction. General measurable H is out of numeric scope.

struct PeriodicEvenSeries {
  double beta = 0.0;
  std::vector<double> cos_coeffs;  // index k-1 -> coefficient of cos(k beta x)

  double a_coefficient() const { return cos_coeffs.empty() ? 0.0 : cos_coeffs[0]; }

  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t k = 1; k <= cos_coeffs.size(); ++k)
      acc += cos_coeffs[k - 1] * std::cos(static_cast<double>(k) * beta * x);
    return acc;
  }
};

/// Validates a raw trigonometric description: coefficient of the constant
/// term must vanish (mean zero) and no sine terms are allowed (even).
inline PeriodicEvenSeries make_periodic_even_series(double beta,
                                                    const std::vector<double>& cos_from_k0,
                                                    const std::vector<double>& sin_coeffs = {}) {
  IMCHAOS_REQUIRE(cos_from_k0.empty() || std::abs(cos_from_k0[0]) < 1e-14,
                  ErrorCode::NotMeanZero, "H must have mean zero");
  for (double s : sin_coeffs)
    IMCHAOS_REQUIRE(std::abs(s) < 1e-14, ErrorCode::NotEven, "H must be even");
  PeriodicEvenSeries h;
  h.beta = beta;
  if (cos_from_k0.size() > 1)
    h.cos_coeffs.assign(cos_from_k0.begin() + 1, cos_from_k0.end());
  return h;
}

/// Truncated square wave sign(cos(beta x)): hk = 4/pi (-1)^{(k-1)/2} / k over
/// odd k, K terms total.
inline PeriodicEvenSeries square_wave_series(double beta, int terms) {
  PeriodicEvenSeries h;
  h.beta = beta;
  h.cos_coeffs.assign(terms, 0.0);
  for (int k = 1; k <= terms; k += 2) {
    const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    h.cos_coeffs[k - 1] = 4.0 / kPi * sign / k;
  }
  return h;
}

/// Renormalised pairing int f e^{(beta^2/2) Var} H(X_n) on the uniform grid,
/// one replica. The predicted limit is a * <cos(beta X), f> with a = h1.
inline double universality_pair_value(const PeriodicEvenSeries& h,
                                      const std::vector<double>& field_values,
                                      double variance, const TestFunction& f,
                                      const std::vector<double>& angles) {
  const double comp = std::exp(0.5 * h.beta * h.beta * variance);
  double acc = 0.0;
  for (std::size_t j = 0; j < field_values.size(); ++j)
    acc += f(Vec2{angles[j], 0.0}) * h(field_values[j]);
  return comp * acc * circle_cell_weight(field_values.size());
}

/// Exact second moment of the mode-k renormalised pairing
/// Y_k = int f e^{(beta^2/2) C_n(x,x)} e^{i k beta X_n} on the circle,
/// by 1-d quadrature of exp((1-k^2) beta^2 V + k^2 beta^2 C_n(dtheta)).
inline double mode_k_second_moment(const CircleScheme& scheme, double beta, int k,
                                   const TestFunction& f, int quad_points = 4096) {
  const double variance = scheme.variance();
  // E Y_k conj(Y_k) = int int f(x) f(y) exp(beta^2 (1-k^2) V + k^2 beta^2 C(x-y))
  // reduce over the difference variable with the circular autocorrelation of f
  std::vector<double> fvals(quad_points);
  for (int j = 0; j < quad_points; ++j)
    fvals[j] = f(Vec2{kTwoPi * j / quad_points, 0.0});
  const double cell = kTwoPi / quad_points;
  double acc = 0.0;
  for (int d = 0; d < quad_points; ++d) {
    double ff = 0.0;
    for (int j = 0; j < quad_points; ++j)
      ff += fvals[j] * fvals[(j + d) % quad_points];
    const double cn = scheme.cov(kTwoPi * d / quad_points);
    acc += ff * std::exp(beta * beta * ((1.0 - k * k) * variance + k * k * cn));
  }
  return acc * cell * cell;
}

// ---------------------------------------------------------------------------
// KL martingale diagnostic on the square.

struct KlMartingaleReport {
  std::vector<int> levels;
  std::vector<Complex> mean;          // E Y_n (MC)
  std::vector<double> mean_stderr;
  std::vector<double> second_moment;  // E |Y_n|^2 (MC)
  Complex integral_f{0, 0};           // Y_0
  double l2_bound = 0.0;              // quadrature bound C ||f||^2
  bool mean_constant = false;
  bool second_moment_monotone = false;
  bool second_moment_bounded = false;
};

/// Verifies E Y_n == int f and that E|Y_n|^2 is nondecreasing and below the
/// convolution-scheme L2 bound. One shared coefficient stream across levels.
inline KlMartingaleReport kl_martingale_diagnostic(const TestFunction& f, double beta,
                                                   const std::vector<int>& levels,
                                                   const std::vector<Vec2>& grid,
                                                   double cell_area, std::size_t replicas,
                                                   std::uint64_t seed, int workers) {
  KlMartingaleReport rep;
  rep.levels = levels;
  const int n_top = *std::max_element(levels.begin(), levels.end());
  const auto top = square_kl_scheme_by_eigenvalue(n_top);

  // per-level variance profiles (deterministic)
  std::vector<std::vector<double>> var(levels.size(), std::vector<double>(grid.size()));
  std::vector<SquareKLScheme> schemes;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    auto s = square_kl_scheme_by_eigenvalue(levels[li]);
    for (std::size_t i = 0; i < grid.size(); ++i) var[li][i] = square_kl_var(s, grid[i]);
    schemes.push_back(std::move(s));
  }

  Complex f_int(0, 0);
  for (const Vec2& p : grid) f_int += f(p);
  f_int *= cell_area;
  rep.integral_f = f_int;

  // eigenfunction table for the shared stream: phi_j(x_i)/sqrt(lambda_j)
  std::vector<std::vector<double>> basis(top.order.size(),
                                         std::vector<double>(grid.size()));
  for (std::size_t t = 0; t < top.order.size(); ++t) {
    const auto [k, l] = top.order[t];
    const double lam = kPi * kPi * (k * k + l * l);
    for (std::size_t i = 0; i < grid.size(); ++i)
      basis[t][i] = 2.0 * std::sin(k * kPi * grid[i][0]) *
                    std::sin(l * kPi * grid[i][1]) / std::sqrt(lam);
  }

  std::vector<std::vector<Complex>> pairings(levels.size(),
                                             std::vector<Complex>(replicas));
  parallel_for(replicas, workers, [&](std::size_t r) {
    Rng rng(seed, r);
    std::vector<double> coeff(top.order.size());
    for (auto& a : coeff) a = rng.normal();
    std::vector<double> x(grid.size(), 0.0);
    std::size_t used = 0;
    for (std::size_t li = 0; li < levels.size(); ++li) {
      for (; used < static_cast<std::size_t>(levels[li]); ++used)
        for (std::size_t i = 0; i < grid.size(); ++i)
          x[i] += coeff[used] * basis[used][i];
      Complex acc(0, 0);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double fv = f(grid[i]);
        if (fv == 0.0) continue;
        acc += fv * std::polar(std::exp(0.5 * beta * beta * var[li][i]), beta * x[i]);
      }
      pairings[li][r] = acc * cell_area;
    }
  });

  rep.mean_constant = true;
  rep.second_moment_monotone = true;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto st = complex_stats(pairings[li]);
    rep.mean.push_back(st.mean);
    rep.mean_stderr.push_back(st.stderr_of_mean);
    std::vector<double> sq(replicas);
    for (std::size_t r = 0; r < replicas; ++r) sq[r] = std::norm(pairings[li][r]);
    const auto s2 = sample_stats(sq);
    rep.second_moment.push_back(s2.mean);
    if (std::abs(st.mean - f_int) > 4.0 * std::max(st.stderr_of_mean, 1e-12))
      rep.mean_constant = false;
    if (li > 0 &&
        rep.second_moment[li] < rep.second_moment[li - 1] - 4.0 * s2.stderr_of_mean)
      rep.second_moment_monotone = false;
  }

  // L2 bound from the convolution estimate: |f(x) f(y)| e^{beta^2 M} / r^{beta^2}
  // with M the window constant of the finest level kernel over the grid.
  double M = 0.0;
  const auto& fine = schemes.back();
  const double c_fine = fine.cutoff;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i; j < grid.size(); ++j) {
      const double r = std::max(dist2d(grid[i], grid[j]), c_fine);
      const double cv = i == j ? var.back()[i] : square_kl_cov(fine, grid[i], grid[j]);
      M = std::max(M, cv + std::log(r));
    }
  double bound = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double fv = std::abs(f(grid[i]) * f(grid[j]));
      if (fv == 0.0) continue;
      const double r = std::max(dist2d(grid[i], grid[j]), c_fine);
      bound += fv * std::exp(beta * beta * (M - std::log(r)));
    }
  rep.l2_bound = bound * cell_area * cell_area;
  rep.second_moment_bounded = rep.second_moment.back() <= rep.l2_bound * 1.02;
  return rep;
}

}  // namespace imchaos
