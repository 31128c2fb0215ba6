// Estimators on critical XOR-Ising sample streams: two-point scaling against
// the continuum formula, pairing moments, magnetic reweighting, and the
// lattice Onsager check.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "imchaos/ising.hpp"
#include "imchaos/quad.hpp"
#include "imchaos/testfunc.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

/// Spin weight w(x) = (|phi'|/(2 Im phi))^{1/4} entering the continuum
/// moment formula.
inline double xor_moment_weight(const Vec2& x) {
  return std::pow(disc_conformal_radius_factor(x), 0.25);
}

// ---------------------------------------------------------------------------
// Two-point function. The spin field scales like delta^{1/8} per insertion,
// so the two-point XOR correlation is compared at delta^{-2/8 * 2} =
// delta^{-1/2} against chi_correlation^2.

struct XorTwoPointReport {
  double scaled = 0.0;   // delta^{-1/2} E[S(x) S(y)]
  double stderr_ = 0.0;
  double oracle = 0.0;   // chi_correlation(x,y)^2
  double ratio = 0.0;
  double factorization_gap_sigma = 0.0;  // XOR product identity check
  std::size_t samples = 0;
};

inline XorTwoPointReport xor_two_point(const FaceLattice& g, const Vec2& x,
                                       const Vec2& y, std::size_t n_samples,
                                       std::uint64_t seed, int workers,
                                       int spacing_override = 0) {
  IMCHAOS_REQUIRE(dist2d(x, y) > 0.1, ErrorCode::ConfigError,
                  "two-point separation must exceed 0.1");
  const int cx = g.face_of(x), cy = g.face_of(y);
  IMCHAOS_REQUIRE(cx >= 0 && cy >= 0, ErrorCode::OutsideDomain,
                  "points must land in interior faces");
  std::vector<double> prod(n_samples), single_a(n_samples);
  CriticalRunConfig cfg;
  cfg.delta = g.delta;
  cfg.n_samples = n_samples;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.spacing_override = spacing_override;
  run_critical_xor(cfg, g,
                   [&](std::size_t idx, const SpinLattice& a, const SpinLattice& b,
                       const FaceLattice&) {
                     const int sa = a.spin[cx] * a.spin[cy];
                     const int sb = b.spin[cx] * b.spin[cy];
                     prod[idx] = sa * sb;
                     single_a[idx] = sa;
                   });
  XorTwoPointReport rep;
  rep.samples = n_samples;
  const double scale = std::pow(g.delta, -0.5);
  const auto st = sample_stats(prod);
  rep.scaled = scale * st.mean;
  rep.stderr_ = scale * st.stderr_of_mean;
  rep.oracle = sqr(chi_correlation({x, y}));
  rep.ratio = rep.scaled / rep.oracle;
  // E[S(x)S(y)] = (E[sigma(x) sigma(y)])^2 for independent copies
  const auto sa = sample_stats(single_a);
  const double gap = st.mean - sqr(sa.mean);
  const double gap_se = std::sqrt(sqr(st.stderr_of_mean) +
                                  sqr(2.0 * sa.mean * sa.stderr_of_mean));
  rep.factorization_gap_sigma = gap / std::max(gap_se, 1e-300);
  return rep;
}

// ---------------------------------------------------------------------------
// Pairing moments E[(delta^{-1/4} int f S)^k] against the k-dimensional
// continuum quadrature, plus the exponential moment diagnostic.

struct XorPairingMomentReport {
  int k = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double oracle = 0.0;
  double ratio = 0.0;
  double exp_moment = 0.0;  // E exp(|delta^{-1/4} int f S|)
  std::size_t samples = 0;
};

/// Continuum target for k = 1: sqrt(2) C^2 int f w.
inline double xor_moment_target_k1(const TestFunction& f) {
  const double c2 = sqr(chi_constant());
  const auto q = genz_malik(
      [&](const std::vector<double>& u) {
        const Vec2 x{u[0], u[1]};
        if (x[0] * x[0] + x[1] * x[1] >= 1.0) return 0.0;
        const double fv = f(x);
        if (fv == 0.0) return 0.0;
        return fv * xor_moment_weight(x);
      },
      {f.center[0] - f.support_radius, f.center[1] - f.support_radius},
      {f.center[0] + f.support_radius, f.center[1] + f.support_radius}, 1e-7, 0.0,
      2000000);
  return std::sqrt(2.0) * c2 * q.value;
}

/// Continuum target for k = 2: C^4 int int f w (x) f w (y)
/// (sqrt(rho) + 1/sqrt(rho)) with rho the pseudo-hyperbolic distance; the
/// rho^{-1/2} singularity is removed by a graded radial substitution.
inline double xor_moment_target_k2(const TestFunction& f, std::size_t budget = 6000000) {
  const double c4 = sqr(sqr(chi_constant()));
  const Vec2 c = f.center;
  const double R = f.support_radius;
  const double qexp = 2.0 / 3.0;  // 1 / (2 - 1/2)
  const double tmax = std::pow(2.0 * R, 1.0 / qexp);
  auto integrand = [&](const std::vector<double>& u) {
    const Vec2 x{u[0], u[1]};
    if (x[0] * x[0] + x[1] * x[1] >= 1.0) return 0.0;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    const double rho = std::pow(u[2], qexp);
    const Vec2 y{x[0] + rho * std::cos(u[3]), x[1] + rho * std::sin(u[3])};
    if (y[0] * y[0] + y[1] * y[1] >= 1.0) return 0.0;
    const double fy = f(y);
    if (fy == 0.0) return 0.0;
    const Complex za(x[0], x[1]), zb(y[0], y[1]);
    const double pseudo = std::abs((za - zb) / (1.0 - std::conj(za) * zb));
    if (pseudo <= 0.0) return 0.0;
    // dy = rho drho dphi with rho = t^q gives rho drho = q t^{2q-1} dt; the
    // 1/sqrt(pseudo) singularity times that factor stays bounded at q = 2/3
    const double rho_drho_dt = qexp * std::pow(u[2], 2.0 * qexp - 1.0);
    const double kernel = std::sqrt(pseudo) + 1.0 / std::sqrt(pseudo);
    return fx * fy * xor_moment_weight(x) * xor_moment_weight(y) * kernel *
           rho_drho_dt;
  };
  const auto q = genz_malik(integrand, {c[0] - R, c[1] - R, 0.0, 0.0},
                            {c[0] + R, c[1] + R, tmax, kTwoPi}, 1e-4, 0.0, budget);
  return c4 * q.value;
}

inline XorPairingMomentReport xor_pairing_moment(const FaceLattice& g,
                                                 const TestFunction& f, int k,
                                                 std::size_t n_samples,
                                                 std::uint64_t seed, int workers,
                                                 int spacing_override = 0) {
  IMCHAOS_REQUIRE(k >= 1 && k <= 4, ErrorCode::ConfigError, "k <= 4");
  FacePairing pairing(g, f);
  std::vector<double> pairings(n_samples);
  CriticalRunConfig cfg;
  cfg.delta = g.delta;
  cfg.n_samples = n_samples;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.spacing_override = spacing_override;
  run_critical_xor(cfg, g,
                   [&](std::size_t idx, const SpinLattice& a, const SpinLattice& b,
                       const FaceLattice&) { pairings[idx] = pairing.xor_value(a, b); });
  const double scale = std::pow(g.delta, -0.25);
  XorPairingMomentReport rep;
  rep.k = k;
  rep.samples = n_samples;
  std::vector<double> powers(n_samples), expm(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double v = scale * pairings[i];
    powers[i] = std::pow(v, k);
    expm[i] = std::exp(std::abs(v));
  }
  const auto st = sample_stats(powers);
  rep.estimate = st.mean;
  rep.stderr_ = st.stderr_of_mean;
  rep.exp_moment = sample_stats(expm).mean;
  rep.oracle = k == 1 ? xor_moment_target_k1(f)
               : k == 2 ? xor_moment_target_k2(f)
                        : 0.0;
  rep.ratio = rep.oracle != 0.0 ? rep.estimate / rep.oracle : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Magnetic reweighting: E_{psi,delta}[F] estimated by importance weights
// exp(delta^{-1/4} int psi S) on critical samples.

struct MagneticReweightReport {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double ess = 0.0;
  double partition = 0.0;  // Z_{psi,delta} estimate (mean weight)
  std::size_t samples = 0;
};

/// observable receives the scaled pairing delta^{-1/4} int f S of one sample.
template <typename Observable>
MagneticReweightReport magnetic_reweight(const FaceLattice& g, const TestFunction& psi,
                                         const TestFunction& f, Observable&& observable,
                                         std::size_t n_samples, std::uint64_t seed,
                                         int workers, int spacing_override = 0) {
  FacePairing pf(g, f), ppsi(g, psi);
  std::vector<double> a_vals(n_samples), b_vals(n_samples);
  CriticalRunConfig cfg;
  cfg.delta = g.delta;
  cfg.n_samples = n_samples;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.spacing_override = spacing_override;
  run_critical_xor(cfg, g,
                   [&](std::size_t idx, const SpinLattice& a, const SpinLattice& b,
                       const FaceLattice&) {
                     a_vals[idx] = pf.xor_value(a, b);
                     b_vals[idx] = ppsi.xor_value(a, b);
                   });
  const double scale = std::pow(g.delta, -0.25);
  MagneticReweightReport rep;
  rep.samples = n_samples;
  double sw = 0, sw2 = 0, swf = 0;
  std::vector<double> w(n_samples), fv(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    w[i] = std::exp(scale * b_vals[i]);
    fv[i] = observable(scale * a_vals[i]);
    sw += w[i];
    sw2 += w[i] * w[i];
    swf += w[i] * fv[i];
  }
  rep.ess = sw * sw / sw2;
  IMCHAOS_REQUIRE(rep.ess >= 50.0, ErrorCode::DegenerateWeights,
                  "effective sample size below 50");
  rep.estimate = swf / sw;
  rep.partition = sw / static_cast<double>(n_samples);
  const std::size_t blocks = std::min<std::size_t>(20, n_samples);
  std::vector<double> loo;
  for (std::size_t bl = 0; bl < blocks; ++bl) {
    const std::size_t lo = n_samples * bl / blocks, hi = n_samples * (bl + 1) / blocks;
    double bw = 0, bwf = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      bw += w[i];
      bwf += w[i] * fv[i];
    }
    if (sw - bw > 0) loo.push_back((swf - bwf) / (sw - bw));
  }
  const auto st = sample_stats(loo);
  rep.stderr_ = st.stderr_of_mean * static_cast<double>(loo.size() - 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Lattice Onsager check: delta^{-k/8} E[sigma(x_1)...sigma(x_k)] against
// C^k prod_i (min_{j != i} |x_i - x_j|)^{-1/8} with a batch-fitted C.

struct SpinOnsagerReport {
  double fitted_c = 0.0;  // max over tuples of the per-tuple constant
  std::vector<double> tuple_c;
  std::size_t samples = 0;
};

inline SpinOnsagerReport spin_onsager_check(const FaceLattice& g,
                                            const std::vector<std::vector<Vec2>>& tuples,
                                            std::size_t n_samples, std::uint64_t seed,
                                            int workers, int spacing_override = 0) {
  for (const auto& t : tuples)
    IMCHAOS_REQUIRE(t.size() >= 2 && t.size() <= 6, ErrorCode::ConfigError,
                    "tuples of size 2..6");
  std::vector<std::vector<int>> cells(tuples.size());
  for (std::size_t t = 0; t < tuples.size(); ++t)
    for (const Vec2& p : tuples[t]) {
      const int c = g.face_of(p);
      IMCHAOS_REQUIRE(c >= 0, ErrorCode::OutsideDomain, "tuple point outside");
      cells[t].push_back(c);
    }
  std::vector<std::vector<double>> prods(tuples.size(),
                                         std::vector<double>(n_samples));
  CriticalRunConfig cfg;
  cfg.delta = g.delta;
  cfg.n_samples = n_samples;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.spacing_override = spacing_override;
  run_critical_single(cfg, g,
                      [&](std::size_t idx, const SpinLattice& a, const FaceLattice&) {
                        for (std::size_t t = 0; t < cells.size(); ++t) {
                          int prod = 1;
                          for (int c : cells[t]) prod *= a.spin[c];
                          prods[t][idx] = prod;
                        }
                      });
  SpinOnsagerReport rep;
  rep.samples = n_samples;
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const double k = static_cast<double>(tuples[t].size());
    const double mean = sample_stats(prods[t]).mean;
    double rhs = 1.0;
    for (std::size_t i = 0; i < tuples[t].size(); ++i) {
      double nn = 1e300;
      for (std::size_t j = 0; j < tuples[t].size(); ++j)
        if (j != i) nn = std::min(nn, dist2d(tuples[t][i], tuples[t][j]));
      rhs *= std::pow(nn, -1.0 / 8.0);
    }
    const double lhs = std::pow(g.delta, -k / 8.0) * std::max(mean, 1e-300);
    rep.tuple_c.push_back(std::pow(lhs / rhs, 1.0 / k));
    rep.fitted_c = std::max(rep.fitted_c, rep.tuple_c.back());
  }
  return rep;
}

}  // namespace imchaos
