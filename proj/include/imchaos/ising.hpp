// Critical Ising / XOR-Ising Monte Carlo on the faces of delta Z^2 inside the
// unit disc with plus boundary conditions, plus the continuum spin-correlation
// evaluator used as the reference oracle.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "imchaos/parallel.hpp"
#include "imchaos/rng.hpp"
#include "imchaos/testfunc.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

inline constexpr double kIsingBetaCritical = 0.44068679350977151262;  // log(1+sqrt 2)/2

// ---------------------------------------------------------------------------
// Geometry: half-open faces delta([n,n+1) x [m,m+1)) whose closure lies in the
// open unit disc; boundary faces are the adjacent ones outside.

struct FaceLattice {
  double delta = 0.0;
  int i0 = 0, j0 = 0, nx = 0, ny = 0;  // bounding box of face indices
  std::vector<std::uint8_t> role;      // 0 outside, 1 interior, 2 boundary
  std::vector<std::int32_t> interior;  // cell ids of interior faces

  int cell(int i, int j) const { return (i - i0) * ny + (j - j0); }
  bool in_box(int i, int j) const {
    return i >= i0 && i < i0 + nx && j >= j0 && j < j0 + ny;
  }
  Vec2 center(int c) const {
    const int i = c / ny + i0, j = c % ny + j0;
    return {(i + 0.5) * delta, (j + 0.5) * delta};
  }
  /// Cell id of the face containing x, or -1 when x is not in an interior face.
  int face_of(const Vec2& x) const {
    const int i = static_cast<int>(std::floor(x[0] / delta));
    const int j = static_cast<int>(std::floor(x[1] / delta));
    if (!in_box(i, j)) return -1;
    const int c = cell(i, j);
    return role[c] == 1 ? c : -1;
  }
};

inline FaceLattice make_disc_lattice(double delta) {
  IMCHAOS_REQUIRE(delta > 0 && delta <= 0.51, ErrorCode::ConfigError,
                  "need delta in (0, 0.51]");
  FaceLattice g;
  g.delta = delta;
  const int m = static_cast<int>(std::ceil(1.0 / delta)) + 2;
  g.i0 = -m;
  g.j0 = -m;
  g.nx = 2 * m;
  g.ny = 2 * m;
  g.role.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  auto contained = [&](int i, int j) {
    for (int a = 0; a <= 1; ++a)
      for (int b = 0; b <= 1; ++b) {
        const double x = (i + a) * delta, y = (j + b) * delta;
        if (x * x + y * y >= 1.0) return false;
      }
    return true;
  };
  for (int i = g.i0; i < g.i0 + g.nx; ++i)
    for (int j = g.j0; j < g.j0 + g.ny; ++j)
      if (contained(i, j)) {
        g.role[g.cell(i, j)] = 1;
        g.interior.push_back(g.cell(i, j));
      }
  // boundary faces: adjacent to an interior face but not interior
  const int off[4] = {1, -1, g.ny, -g.ny};
  for (int c : g.interior)
    for (int k = 0; k < 4; ++k) {
      const int n = c + off[k];
      if (g.role[n] == 0) g.role[n] = 2;
    }
  return g;
}

struct SpinLattice {
  const FaceLattice* geom = nullptr;
  std::vector<std::int8_t> spin;  // +1 off-lattice and on boundary faces

  explicit SpinLattice(const FaceLattice& g) : geom(&g) {
    spin.assign(g.role.size(), 1);
  }
  int operator[](int c) const { return spin[c]; }
};

// ---------------------------------------------------------------------------
// Pinned-boundary Wolff. Bonds between like spins open with 1 - e^{-2 beta};
// a bond into a boundary face pins the cluster, and pinned clusters are not
// flipped (the Edwards-Sokal conditional keeps boundary components at +1).

struct WolffResult {
  std::size_t size = 0;  // faces gathered before the flip decision
  bool flipped = false;
};

class WolffSampler {
 public:
  WolffSampler(const FaceLattice& geom, double inv_temp)
      : geom_(&geom),
        p_add_(1.0 - std::exp(-2.0 * inv_temp)),
        stamp_(geom.role.size(), 0),
        epoch_(0) {}

  WolffResult step(SpinLattice& s, Rng& rng) {
    const auto& g = *geom_;
    ++epoch_;
    stack_.clear();
    cluster_.clear();
    const int seed_cell =
        g.interior[rng.uniform_index(g.interior.size())];
    const std::int8_t cluster_spin = s.spin[seed_cell];
    stamp_[seed_cell] = epoch_;
    stack_.push_back(seed_cell);
    cluster_.push_back(seed_cell);
    bool pinned = false;
    const int off[4] = {1, -1, g.ny, -g.ny};
    while (!stack_.empty() && !pinned) {
      const int c = stack_.back();
      stack_.pop_back();
      for (int k = 0; k < 4; ++k) {
        const int n = c + off[k];
        const std::uint8_t role = g.role[n];
        if (role == 0) continue;
        if (role == 2) {
          if (cluster_spin == 1 && rng.bernoulli(p_add_)) {
            pinned = true;
            break;
          }
          continue;
        }
        if (stamp_[n] == epoch_ || s.spin[n] != cluster_spin) continue;
        if (rng.bernoulli(p_add_)) {
          stamp_[n] = epoch_;
          stack_.push_back(n);
          cluster_.push_back(n);
        }
      }
    }
    WolffResult res;
    res.size = cluster_.size();
    if (!pinned) {
      for (int c : cluster_) s.spin[c] = -s.spin[c];
      res.flipped = true;
    }
    return res;
  }

 private:
  const FaceLattice* geom_;
  double p_add_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_;
  std::vector<int> stack_, cluster_;
};

/// Exact Gibbs distribution over interior-spin states for tiny systems
/// (used as the correctness gate for the cluster dynamics). State bit i is
/// the spin of geom.interior[i] (+1 when set).
inline std::vector<double> exact_gibbs_distribution(const FaceLattice& g,
                                                    double inv_temp) {
  const int n = static_cast<int>(g.interior.size());
  IMCHAOS_REQUIRE(n <= 20, ErrorCode::ConfigError, "enumeration needs <= 20 faces");
  std::vector<int> index_of(g.role.size(), -1);
  for (int i = 0; i < n; ++i) index_of[g.interior[i]] = i;
  const int off[4] = {1, -1, g.ny, -g.ny};
  std::vector<double> weight(1ULL << n, 0.0);
  double total = 0.0;
  for (std::uint32_t state = 0; state < (1U << n); ++state) {
    double bond_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const int c = g.interior[i];
      const int si = (state >> i) & 1 ? 1 : -1;
      for (int k = 0; k < 4; ++k) {
        const int nb = c + off[k];
        if (g.role[nb] == 2) {
          bond_sum += si;  // boundary spin +1
        } else if (g.role[nb] == 1) {
          const int jj = index_of[nb];
          if (jj > i) bond_sum += si * (((state >> jj) & 1) ? 1 : -1);
        }
      }
    }
    weight[state] = std::exp(inv_temp * bond_sum);
    total += weight[state];
  }
  for (auto& w : weight) w /= total;
  return weight;
}

// ---------------------------------------------------------------------------
// Critical sampling driver: thermalization, pilot-calibrated spacing,
// independent chains per worker merged by sample index.

struct CriticalRunConfig {
  double delta = 1.0 / 64;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  int spacing_override = 0;     // 0: calibrate from the pilot
  double autocorr_target = 0.05;
  int max_spacing = 400;
};

inline std::size_t thermalization_steps(const FaceLattice& g) {
  return static_cast<std::size_t>(
      10.0 * std::pow(static_cast<double>(g.interior.size()), 0.6));
}

/// Lag-s autocorrelation of probe-face spins along one chain.
inline int calibrate_spacing(const FaceLattice& g, WolffSampler& wolff,
                             SpinLattice& s, Rng& rng, double target, int cap) {
  const int probes = 24;
  std::vector<int> probe_cells;
  for (int i = 0; i < probes; ++i)
    probe_cells.push_back(g.interior[(g.interior.size() * i) / probes]);
  const int steps = 3000;
  std::vector<std::int8_t> series(static_cast<std::size_t>(steps) * probes);
  for (int t = 0; t < steps; ++t) {
    wolff.step(s, rng);
    for (int pi = 0; pi < probes; ++pi)
      series[static_cast<std::size_t>(t) * probes + pi] =
          s.spin[probe_cells[pi]];
  }
  for (int lag = 1; lag <= cap; ++lag) {
    double num = 0, den = 0, mean = 0;
    for (std::size_t i = 0; i < series.size(); ++i) mean += series[i];
    mean /= static_cast<double>(series.size());
    for (int t = 0; t + lag < steps; ++t)
      for (int pi = 0; pi < probes; ++pi) {
        const double a = series[static_cast<std::size_t>(t) * probes + pi] - mean;
        const double b =
            series[static_cast<std::size_t>(t + lag) * probes + pi] - mean;
        num += a * b;
      }
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double a = series[i] - mean;
      den += a * a;
    }
    if (num / den < target) return std::max(2, lag);
  }
  return cap;
}

/// Runs independent XOR chains (two Ising copies each) and hands every sample
/// to obs(sample_index, spins_a, spins_b, geometry). obs must only touch
/// state owned by the sample index.
template <typename Obs>
void run_critical_xor(const CriticalRunConfig& cfg, const FaceLattice& g, Obs&& obs) {
  const std::size_t chains =
      std::min<std::size_t>(std::max(1, cfg.workers), cfg.n_samples);
  std::vector<int> spacing_used(chains, 0);
  parallel_for(chains, cfg.workers, [&](std::size_t chain) {
    Rng rng(cfg.seed, 0x15EED ^ chain);
    WolffSampler wolff(g, kIsingBetaCritical);
    SpinLattice a(g), b(g);
    const std::size_t therm = thermalization_steps(g);
    for (std::size_t t = 0; t < therm; ++t) {
      wolff.step(a, rng);
      wolff.step(b, rng);
    }
    int spacing = cfg.spacing_override;
    if (spacing == 0) {
      spacing = calibrate_spacing(g, wolff, a, rng, cfg.autocorr_target,
                                  cfg.max_spacing);
    }
    spacing_used[chain] = spacing;
    const std::size_t lo = cfg.n_samples * chain / chains;
    const std::size_t hi = cfg.n_samples * (chain + 1) / chains;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      for (int t = 0; t < spacing; ++t) {
        wolff.step(a, rng);
        wolff.step(b, rng);
      }
      obs(idx, a, b, g);
    }
  });
}

/// Single-copy variant for plain Ising estimators.
template <typename Obs>
void run_critical_single(const CriticalRunConfig& cfg, const FaceLattice& g,
                         Obs&& obs) {
  const std::size_t chains =
      std::min<std::size_t>(std::max(1, cfg.workers), cfg.n_samples);
  parallel_for(chains, cfg.workers, [&](std::size_t chain) {
    Rng rng(cfg.seed, 0x51D ^ chain);
    WolffSampler wolff(g, kIsingBetaCritical);
    SpinLattice a(g);
    const std::size_t therm = thermalization_steps(g);
    for (std::size_t t = 0; t < therm; ++t) wolff.step(a, rng);
    int spacing = cfg.spacing_override;
    if (spacing == 0)
      spacing = calibrate_spacing(g, wolff, a, rng, cfg.autocorr_target,
                                  cfg.max_spacing);
    const std::size_t lo = cfg.n_samples * chain / chains;
    const std::size_t hi = cfg.n_samples * (chain + 1) / chains;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      for (int t = 0; t < spacing; ++t) wolff.step(a, rng);
      obs(idx, a, g);
    }
  });
}

/// delta^2 sum over faces of f * S for the pairing estimators; faces with
/// zero f are skipped via a precomputed support list.
struct FacePairing {
  std::vector<int> cells;
  std::vector<double> fvals;
  double cell_area = 0.0;

  FacePairing(const FaceLattice& g, const TestFunction& f) {
    cell_area = g.delta * g.delta;
    for (int c : g.interior) {
      const double v = f(g.center(c));
      if (v != 0.0) {
        cells.push_back(c);
        fvals.push_back(v);
      }
    }
  }

  double xor_value(const SpinLattice& a, const SpinLattice& b) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i)
      acc += fvals[i] * a.spin[cells[i]] * b.spin[cells[i]];
    return acc * cell_area;
  }
};

// ---------------------------------------------------------------------------
// Continuum spin-correlation evaluator (scaling-limit formula on the disc,
// conformal map phi(z) = i (1-z)/(1+z) onto the upper half plane).

/// zeta'(2) by Euler-Maclaurin, then zeta'(-1) through the functional
/// equation: zeta'(-1) = -(1/12) [log(2 pi) + gamma - 1 - zeta'(2)/zeta(2)].
inline double zeta_prime_minus_one() {
  static const double value = [] {
    const long long m = 2000000;
    double tail = 0.0;
    for (long long n = m - 1; n >= 2; --n) {
      const double x = static_cast<double>(n);
      tail += std::log(x) / (x * x);
    }
    const double M = static_cast<double>(m);
    const double fM = std::log(M) / (M * M);
    const double dfM = (1.0 - 2.0 * std::log(M)) / (M * M * M);
    const double zp2 = -(tail + (std::log(M) + 1.0) / M + 0.5 * fM - dfM / 12.0);
    const double euler_gamma = 0.57721566490153286061;
    const double zeta2 = kPi * kPi / 6.0;
    return -(std::log(kTwoPi) + euler_gamma - 1.0 - zp2 / zeta2) / 12.0;
  }();
  return value;
}

/// The lattice-independent constant 2^{5/48} e^{(3/2) zeta'(-1)}, recomputed
/// from the series at first use.
inline double chi_constant() {
  static const double value =
      std::pow(2.0, 5.0 / 48.0) * std::exp(1.5 * zeta_prime_minus_one());
  return value;
}

/// Full n-point limit formula: C^n prod (|phi'|/(2 Im phi))^{1/8} times
/// (2^{-n/2} sum over sign vectors of prod |(phi_k-phi_m)/(phi_k-conj
/// phi_m)|^{mu_k mu_m / 2})^{1/2}. Refuses n > 20.
inline double chi_correlation(const std::vector<Vec2>& points) {
  const std::size_t n = points.size();
  IMCHAOS_REQUIRE(n >= 1 && n <= 20, ErrorCode::ConfigError,
                  "chi_correlation supports 1 <= n <= 20");
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::hypot(points[i][0], points[i][1]);
    IMCHAOS_REQUIRE(1.0 - r > 0.01, ErrorCode::PointsTooClose,
                    "points must keep distance > 0.01 from the boundary");
    for (std::size_t j = i + 1; j < n; ++j)
      IMCHAOS_REQUIRE(dist2d(points[i], points[j]) > 0.01, ErrorCode::PointsTooClose,
                      "pairwise distance must exceed 0.01");
  }
  std::vector<Complex> phi(n);
  double prefactor = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = disc_to_halfplane(Complex(points[i][0], points[i][1]));
    prefactor *= std::pow(disc_conformal_radius_factor(points[i]), 1.0 / 8.0);
  }
  // log-ratios log|(phi_k - phi_m)/(phi_k - conj phi_m)| per pair
  std::vector<double> logr(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = k + 1; m < n; ++m)
      logr[k * n + m] = std::log(
          std::abs((phi[k] - phi[m]) / (phi[k] - std::conj(phi[m]))));
  double sum = 0.0;
  for (std::size_t bits = 0; bits < (1ULL << n); ++bits) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t m = k + 1; m < n; ++m) {
        const int mu = ((bits >> k) & 1 ? 1 : -1) * ((bits >> m) & 1 ? 1 : -1);
        acc += 0.5 * mu * logr[k * n + m];
      }
    sum += std::exp(acc);
  }
  const double inner = std::pow(2.0, -0.5 * static_cast<double>(n)) * sum;
  return std::pow(chi_constant(), static_cast<double>(n)) * prefactor *
         std::sqrt(inner);
}

/// Closed-form one-point value (separate code path for cross-validation).
inline double chi_correlation_n1(const Vec2& z) {
  return chi_constant() * std::pow(disc_conformal_radius_factor(z), 1.0 / 8.0) *
         std::pow(2.0, 0.25);
}

/// Closed-form two-point value via the pseudo-hyperbolic distance on the
/// disc (conformal invariance; no half-plane map involved).
inline double chi_correlation_n2(const Vec2& a, const Vec2& b) {
  const Complex za(a[0], a[1]), zb(b[0], b[1]);
  const double rho = std::abs((za - zb) / (1.0 - std::conj(za) * zb));
  const double inner = 0.5 * (2.0 * std::sqrt(rho) + 2.0 / std::sqrt(rho));
  const double pref = std::pow(disc_conformal_radius_factor(a), 1.0 / 8.0) *
                      std::pow(disc_conformal_radius_factor(b), 1.0 / 8.0);
  return sqr(chi_constant()) * pref * std::sqrt(inner);
}

// ---------------------------------------------------------------------------
// Snapshot container: run-length-encoded spins over the bounding box.

inline std::string serialize_spins(const SpinLattice& s) {
  const auto& g = *s.geom;
  std::string out = "IMIS";
  auto put_u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  std::uint64_t dbits;
  static_assert(sizeof(double) == 8);
  std::memcpy(&dbits, &g.delta, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((dbits >> (8 * i)) & 0xff));
  put_u32(static_cast<std::uint32_t>(g.i0));
  put_u32(static_cast<std::uint32_t>(g.j0));
  put_u32(static_cast<std::uint32_t>(g.nx));
  put_u32(static_cast<std::uint32_t>(g.ny));
  out.push_back(s.spin.empty() || s.spin[0] > 0 ? 1 : 0);
  std::uint32_t run = 0;
  std::int8_t cur = s.spin.empty() ? 1 : s.spin[0];
  for (std::int8_t v : s.spin) {
    if (v == cur) {
      ++run;
    } else {
      put_u32(run);
      cur = v;
      run = 1;
    }
  }
  put_u32(run);
  return out;
}

}  // namespace imchaos
