// Gaussian field realizations: three samplers, the standard-approximation
// checker, and the flat binary / CSV containers.
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "imchaos/fft.hpp"
#include "imchaos/model.hpp"
#include "imchaos/rng.hpp"
#include "imchaos/scheme.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

struct FieldRealization {
  Domain domain = Domain::Circle;
  int dimension = 1;
  SchemeKind scheme_kind = SchemeKind::CircleFourier;
  int scheme_n = 0;
  double scheme_eps = 0.0;
  double cutoff = 0.0;
  std::uint64_t seed = 0;
  std::vector<Vec2> grid;  // circle stores {theta, 0}
  std::vector<double> values;
  std::vector<double> variance_profile;  // E X_n(x)^2, computed analytically
};

// ---------------------------------------------------------------------------
// Circle field  X_n(t) = sqrt(2) Re sum_{k<=n} w_k k^{-1/2} e^{ikt} W_k

/// Draws the complex mode coefficients W_1..W_n in a fixed order.
inline std::vector<Complex> draw_circle_modes(int n_modes, Rng& rng) {
  std::vector<Complex> w(n_modes);
  for (auto& z : w) z = rng.complex_normal();
  return w;
}

/// Evaluates the field with given coefficients on arbitrary angles.
inline std::vector<double> eval_circle_field(const CircleScheme& scheme,
                                             const std::vector<Complex>& modes,
                                             const std::vector<double>& angles) {
  std::vector<double> out(angles.size(), 0.0);
  for (std::size_t j = 0; j < angles.size(); ++j) {
    const Complex rot(std::cos(angles[j]), std::sin(angles[j]));
    Complex zk(1.0, 0.0);
    double acc = 0.0;
    for (int k = 1; k <= scheme.n_modes; ++k) {
      zk *= rot;
      acc += scheme.weight[k - 1] / std::sqrt(static_cast<double>(k)) *
             (zk.real() * modes[k - 1].real() - zk.imag() * modes[k - 1].imag());
    }
    out[j] = std::sqrt(2.0) * acc;
  }
  return out;
}

/// FFT fast path on the uniform grid theta_j = 2 pi j / m (m a power of two,
/// n_modes < m/2). Used by every circle Monte Carlo loop.
inline void eval_circle_field_uniform(const CircleScheme& scheme,
                                      const std::vector<Complex>& modes,
                                      std::size_t m, std::vector<double>& out,
                                      std::vector<Complex>& scratch) {
  IMCHAOS_REQUIRE(static_cast<std::size_t>(scheme.n_modes) < m / 2,
                  ErrorCode::ConfigError, "grid must resolve the modes");
  scratch.assign(m, Complex(0, 0));
  const double sqrt2 = std::sqrt(2.0);
  for (int k = 1; k <= scheme.n_modes; ++k)
    scratch[k] = sqrt2 * scheme.weight[k - 1] /
                 std::sqrt(static_cast<double>(k)) * modes[k - 1];
  fft_inplace(scratch, +1);
  out.resize(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = scratch[j].real();
}

inline std::vector<double> uniform_circle_grid(std::size_t m) {
  std::vector<double> angles(m);
  for (std::size_t j = 0; j < m; ++j) angles[j] = kTwoPi * j / m;
  return angles;
}

inline FieldRealization sample_circle_field(int n_modes,
                                            const std::vector<double>& angles,
                                            std::uint64_t seed,
                                            std::uint64_t stream = 0) {
  const CircleScheme scheme = circle_fourier_scheme(n_modes);
  Rng rng(seed, stream);
  const auto modes = draw_circle_modes(n_modes, rng);
  FieldRealization f;
  f.domain = Domain::Circle;
  f.dimension = 1;
  f.scheme_kind = scheme.kind;
  f.scheme_n = n_modes;
  f.cutoff = scheme.cutoff;
  f.seed = seed;
  f.grid.reserve(angles.size());
  for (double a : angles) f.grid.push_back({a, 0.0});
  f.values = eval_circle_field(scheme, modes, angles);
  f.variance_profile.assign(angles.size(), scheme.variance());
  return f;
}

// ---------------------------------------------------------------------------
// Square GFF via the sine eigenbasis.

struct SquareGffCoeffs {
  int m = 0;
  std::vector<double> b;  // b[(k-1)*m + (l-1)] = A_{kl}/sqrt(lambda_{kl})
};

inline SquareGffCoeffs draw_square_gff_coeffs(int n_modes, Rng& rng) {
  SquareGffCoeffs c;
  c.m = n_modes;
  c.b.resize(static_cast<std::size_t>(n_modes) * n_modes);
  for (int k = 1; k <= n_modes; ++k)
    for (int l = 1; l <= n_modes; ++l) {
      const double lam = kPi * kPi * (k * k + l * l);
      c.b[static_cast<std::size_t>(k - 1) * n_modes + (l - 1)] =
          rng.normal() / std::sqrt(lam);
    }
  return c;
}

inline double eval_square_gff_point(const SquareGffCoeffs& c, const Vec2& p) {
  // separable contraction: sum_k sin(k pi x) [sum_l b_{kl} sin(l pi y)]
  double acc = 0.0;
  std::vector<double> sl(c.m);
  for (int l = 1; l <= c.m; ++l) sl[l - 1] = std::sin(l * kPi * p[1]);
  for (int k = 1; k <= c.m; ++k) {
    double inner = 0.0;
    const double* row = &c.b[static_cast<std::size_t>(k - 1) * c.m];
    for (int l = 0; l < c.m; ++l) inner += row[l] * sl[l];
    acc += std::sin(k * kPi * p[0]) * inner;
  }
  return 2.0 * acc;
}

inline FieldRealization sample_square_gff(int n_modes, const std::vector<Vec2>& grid,
                                          std::uint64_t seed, std::uint64_t stream = 0) {
  IMCHAOS_REQUIRE(n_modes >= 1, ErrorCode::ConfigError, "n_modes >= 1");
  for (const Vec2& p : grid)
    IMCHAOS_REQUIRE(p[0] > 0 && p[0] < 1 && p[1] > 0 && p[1] < 1,
                    ErrorCode::OutsideDomain, "grid must lie in (0,1)^2");
  Rng rng(seed, stream);
  const auto coeffs = draw_square_gff_coeffs(n_modes, rng);
  const auto scheme = square_kl_scheme(n_modes);
  FieldRealization f;
  f.domain = Domain::UnitSquare;
  f.dimension = 2;
  f.scheme_kind = SchemeKind::SquareKL;
  f.scheme_n = n_modes;
  f.cutoff = scheme.cutoff;
  f.seed = seed;
  f.grid = grid;
  f.values.resize(grid.size());
  f.variance_profile.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    f.values[i] = eval_square_gff_point(coeffs, grid[i]);
    f.variance_profile[i] = square_kl_var(scheme, grid[i]);
  }
  return f;
}

/// Tensor-grid evaluation (values and variances) used by the figure pipeline;
/// O(m^2 (nx+ny) + nx ny m) instead of O(nx ny m^2).
struct SquareTensorField {
  std::vector<double> xs, ys;
  std::vector<double> values;    // row-major, index i*ny + j for (xs[i], ys[j])
  std::vector<double> variance;  // same layout
};

inline SquareTensorField sample_square_gff_tensor(int m, const std::vector<double>& xs,
                                                  const std::vector<double>& ys,
                                                  std::uint64_t seed,
                                                  std::uint64_t stream = 0) {
  Rng rng(seed, stream);
  const auto coeffs = draw_square_gff_coeffs(m, rng);
  const std::size_t nx = xs.size(), ny = ys.size();
  SquareTensorField out;
  out.xs = xs;
  out.ys = ys;
  out.values.assign(nx * ny, 0.0);
  out.variance.assign(nx * ny, 0.0);

  std::vector<double> sx(nx * m), sy(ny * m);
  for (std::size_t i = 0; i < nx; ++i)
    for (int k = 1; k <= m; ++k) sx[i * m + (k - 1)] = std::sin(k * kPi * xs[i]);
  for (std::size_t j = 0; j < ny; ++j)
    for (int l = 1; l <= m; ++l) sy[j * m + (l - 1)] = std::sin(l * kPi * ys[j]);

  // values: t[k][j] = sum_l b_{kl} sy[j][l]
  std::vector<double> t(static_cast<std::size_t>(m) * ny, 0.0);
  for (int k = 0; k < m; ++k)
    for (std::size_t j = 0; j < ny; ++j) {
      double acc = 0.0;
      const double* row = &coeffs.b[static_cast<std::size_t>(k) * m];
      const double* syj = &sy[j * m];
      for (int l = 0; l < m; ++l) acc += row[l] * syj[l];
      t[static_cast<std::size_t>(k) * ny + j] = acc;
    }
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      double acc = 0.0;
      for (int k = 0; k < m; ++k)
        acc += sx[i * m + k] * t[static_cast<std::size_t>(k) * ny + j];
      out.values[i * ny + j] = 2.0 * acc;
    }

  // variance: (4/pi^2) sum_{kl} sin^2 sin^2/(k^2+l^2), contracted per row
  std::vector<double> p2x(nx * m), p2y(ny * m);
  for (std::size_t i = 0; i < nx * m; ++i) p2x[i] = sx[i] * sx[i];
  for (std::size_t j = 0; j < ny * m; ++j) p2y[j] = sy[j] * sy[j];
  std::vector<double> w(static_cast<std::size_t>(nx) * m);
  for (std::size_t i = 0; i < nx; ++i)
    for (int l = 1; l <= m; ++l) {
      double acc = 0.0;
      for (int k = 1; k <= m; ++k)
        acc += p2x[i * m + (k - 1)] / static_cast<double>(k * k + l * l);
      w[i * m + (l - 1)] = acc;
    }
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      double acc = 0.0;
      for (int l = 0; l < m; ++l) acc += w[i * m + l] * p2y[j * m + l];
      out.variance[i * ny + j] = 4.0 / (kPi * kPi) * acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Disc (and square) mollified-covariance sampler: exact N(0, Sigma_eps) on a
// fixed grid via an in-place Cholesky factorization.

class MollifiedGaussianSampler {
 public:
  MollifiedGaussianSampler(LogCorrelatedModel model, std::vector<Vec2> grid, double eps)
      : model_(model), grid_(std::move(grid)), eps_(eps) {
    const std::size_t n = grid_.size();
    IMCHAOS_REQUIRE(n >= 1 && n <= 8192, ErrorCode::ConfigError,
                    "grid size must be in [1, 8192]");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        IMCHAOS_REQUIRE(dist2d(grid_[i], grid_[j]) > 1e-12, ErrorCode::CoincidentPoints,
                        "grid points must be pairwise distinct");
    chol_.assign(n * n, 0.0);
    variance_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j)
        chol_[i * n + j] = conv_cov(model_, eps_, grid_[i], grid_[j]);
      variance_[i] = chol_[i * n + i];
    }
    factorize();
  }

  double cov(std::size_t i, std::size_t j) const {
    return conv_cov(model_, eps_, grid_[i], grid_[j]);
  }

  const std::vector<Vec2>& grid() const { return grid_; }
  const std::vector<double>& variance_profile() const { return variance_; }
  double eps() const { return eps_; }
  const LogCorrelatedModel& model() const { return model_; }

  void draw(Rng& rng, std::vector<double>& out) const {
    const std::size_t n = grid_.size();
    std::vector<double> xi(n);
    for (auto& v : xi) v = rng.normal();
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &chol_[i * n];
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc += row[j] * xi[j];
      out[i] = acc;
    }
  }

 private:
  void factorize() {
    // Standard LLT on the lower triangle; pivots within the relative PSD
    // slack are treated as zero modes, anything lower is a hard failure.
    const std::size_t n = grid_.size();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      max_diag = std::max(max_diag, chol_[i * n + i]);
    const double slack = 1e-8 * std::max(1.0, max_diag);
    for (std::size_t j = 0; j < n; ++j) {
      double d = chol_[j * n + j];
      for (std::size_t k = 0; k < j; ++k) d -= sqr(chol_[j * n + k]);
      IMCHAOS_REQUIRE(d > -slack, ErrorCode::FactorizationFailure,
                      "mollified covariance is not numerically PSD; eps too small "
                      "for the grid spacing");
      const double piv = std::sqrt(std::max(d, 0.0));
      chol_[j * n + j] = piv;
      for (std::size_t i = j + 1; i < n; ++i) {
        double v = chol_[i * n + j];
        for (std::size_t k = 0; k < j; ++k)
          v -= chol_[i * n + k] * chol_[j * n + k];
        chol_[i * n + j] = piv > 0 ? v / piv : 0.0;
      }
    }
  }

  LogCorrelatedModel model_;
  std::vector<Vec2> grid_;
  double eps_;
  std::vector<double> chol_;
  std::vector<double> variance_;
};

inline FieldRealization sample_disc_gff(const std::vector<Vec2>& grid, double eps,
                                        std::uint64_t seed, std::uint64_t stream = 0) {
  MollifiedGaussianSampler sampler(LogCorrelatedModel::unit_disc(), grid, eps);
  Rng rng(seed, stream);
  FieldRealization f;
  f.domain = Domain::UnitDisc;
  f.dimension = 2;
  f.scheme_kind = SchemeKind::Convolution;
  f.scheme_eps = eps;
  f.cutoff = eps;
  f.seed = seed;
  f.grid = grid;
  sampler.draw(rng, f.values);
  f.variance_profile = sampler.variance_profile();
  return f;
}

// ---------------------------------------------------------------------------
// Standard-approximation checker (Definition 2.4-style conditions, evaluated
// analytically on a compact probe set).

struct SchemeProbe {
  // Analytic kernel of one approximation level plus a coupled cross kernel.
  std::string label;
  double cutoff = 0.0;
  std::function<double(const Vec2&, const Vec2&)> cov;
  // cross(x, y, other_level_index): E X_this(x) X_other(y); empty if the
  // sequence is not coupled (then condition (i) uses the finest level).
  std::function<double(const Vec2&, const Vec2&, std::size_t)> cross;
};

struct StandardApproxReport {
  bool cross_covariance_converges = false;  // (i)
  bool uniform_window_bound = false;        // (ii)
  bool upper_bound_holds = false;           // (iii)
  std::vector<double> l1_cross_distance;    // per consecutive pair
  std::vector<double> window_sup;           // per level, sup | cov - log 1/max(c,r) |
  std::vector<double> upper_sup;            // per level, sup [ cov - log 1/r ]
  double window_slope = 0.0;                // trend of window_sup vs log(1/c_n)
  double upper_bound_constant = 0.0;        // max of upper_sup
};

inline StandardApproxReport check_standard_approximation(
    const LogCorrelatedModel& model, const std::vector<SchemeProbe>& levels,
    const std::vector<Vec2>& probe_set, double upper_bound_limit = 3.0,
    double window_slope_tol = 0.1) {
  IMCHAOS_REQUIRE(levels.size() >= 3, ErrorCode::NotComparable,
                  "need at least three levels with decreasing cutoff");
  for (std::size_t i = 1; i < levels.size(); ++i)
    IMCHAOS_REQUIRE(levels[i].cutoff < levels[i - 1].cutoff, ErrorCode::NotComparable,
                    "cutoffs must strictly decrease");
  StandardApproxReport rep;

  for (const auto& lv : levels) {
    double wsup = 0.0, usup = -1e300;
    for (std::size_t i = 0; i < probe_set.size(); ++i)
      for (std::size_t j = i; j < probe_set.size(); ++j) {
        const double r = model.dist(probe_set[i], probe_set[j]);
        const double c = lv.cov(probe_set[i], probe_set[j]);
        wsup = std::max(wsup, std::abs(c + std::log(std::max(lv.cutoff, r))));
        if (i != j) usup = std::max(usup, c + std::log(r));
      }
    rep.window_sup.push_back(wsup);
    rep.upper_sup.push_back(usup);
  }

  // (i): L1 distance of the cross kernel to C_X over probe pairs, consecutive
  // levels; must decrease along the refinement.
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < probe_set.size(); ++i)
      for (std::size_t j = i + 1; j < probe_set.size(); ++j) {
        const double cx = model.covariance(probe_set[i], probe_set[j]);
        const double cross =
            levels[l].cross
                ? levels[l].cross(probe_set[i], probe_set[j], l + 1)
                : levels[l].cov(probe_set[i], probe_set[j]);
        acc += std::abs(cross - cx);
        ++cnt;
      }
    rep.l1_cross_distance.push_back(acc / static_cast<double>(cnt));
  }
  rep.cross_covariance_converges = true;
  for (std::size_t i = 1; i < rep.l1_cross_distance.size(); ++i)
    if (rep.l1_cross_distance[i] > rep.l1_cross_distance[i - 1] * 1.05)
      rep.cross_covariance_converges = false;

  // (ii): the sup stays bounded along the sequence; detected as a near-zero
  // trend against log(1/c_n).
  std::vector<double> logs;
  for (const auto& lv : levels) logs.push_back(std::log(1.0 / lv.cutoff));
  rep.window_slope = theil_sen_slope(logs, rep.window_sup);
  rep.uniform_window_bound = std::abs(rep.window_slope) < window_slope_tol;

  // (iii): one constant bounds cov - log(1/r) from above at every level.
  rep.upper_bound_constant = *std::max_element(rep.upper_sup.begin(), rep.upper_sup.end());
  rep.upper_bound_holds = rep.upper_bound_constant < upper_bound_limit;
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization: flat binary container and CSV.

namespace detail {
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
inline void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& s, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  put_u64(s, v);
}
struct ByteReader {
  const unsigned char* p;
  const unsigned char* end;
  std::uint16_t u16() {
    check(2);
    std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    p += 2;
    return v;
  }
  std::uint64_t u64() {
    check(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double x;
    std::memcpy(&x, &v, 8);
    return x;
  }
  unsigned char u8() {
    check(1);
    return *p++;
  }
  void check(std::size_t n) {
    IMCHAOS_REQUIRE(p + n <= end, ErrorCode::ConfigError, "truncated container");
  }
};
}  // namespace detail

/// IMCF container: header {magic "IMCF", version u16, d u8, scheme tag u8,
/// n_points u64, seed u64}, then little-endian f64 grid coordinates (d per
/// point), values, variance_profile.
inline std::string serialize_field(const FieldRealization& f) {
  std::string s;
  s += "IMCF";
  detail::put_u16(s, 1);
  s.push_back(static_cast<char>(f.dimension));
  s.push_back(static_cast<char>(f.scheme_kind));
  detail::put_u64(s, f.grid.size());
  detail::put_u64(s, f.seed);
  for (const Vec2& p : f.grid) {
    detail::put_f64(s, p[0]);
    if (f.dimension == 2) detail::put_f64(s, p[1]);
  }
  for (double v : f.values) detail::put_f64(s, v);
  for (double v : f.variance_profile) detail::put_f64(s, v);
  return s;
}

inline FieldRealization deserialize_field(const std::string& bytes) {
  IMCHAOS_REQUIRE(bytes.size() >= 24 && bytes.compare(0, 4, "IMCF") == 0,
                  ErrorCode::ConfigError, "not an IMCF container");
  detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()) + 4,
                       reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size()};
  const std::uint16_t version = r.u16();
  IMCHAOS_REQUIRE(version == 1, ErrorCode::ConfigError, "unsupported IMCF version");
  FieldRealization f;
  f.dimension = r.u8();
  f.scheme_kind = static_cast<SchemeKind>(r.u8());
  const std::uint64_t n = r.u64();
  f.seed = r.u64();
  f.domain = f.dimension == 1 ? Domain::Circle : Domain::UnitSquare;
  f.grid.resize(n);
  for (auto& p : f.grid) {
    p[0] = r.f64();
    p[1] = f.dimension == 2 ? r.f64() : 0.0;
  }
  f.values.resize(n);
  for (auto& v : f.values) v = r.f64();
  f.variance_profile.resize(n);
  for (auto& v : f.variance_profile) v = r.f64();
  return f;
}

inline void write_field(const FieldRealization& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  IMCHAOS_REQUIRE(out.good(), ErrorCode::ConfigError, "cannot open " + path);
  const std::string bytes = serialize_field(f);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline FieldRealization read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  IMCHAOS_REQUIRE(in.good(), ErrorCode::ConfigError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return deserialize_field(bytes);
}

/// CSV columns: x[,y],value,variance.
inline void write_field_csv(const FieldRealization& f, const std::string& path) {
  std::ofstream out(path);
  IMCHAOS_REQUIRE(out.good(), ErrorCode::ConfigError, "cannot open " + path);
  out << (f.dimension == 2 ? "x,y,value,variance\n" : "x,value,variance\n");
  char line[160];
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    if (f.dimension == 2)
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", f.grid[i][0],
                    f.grid[i][1], f.values[i], f.variance_profile[i]);
    else
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", f.grid[i][0],
                    f.values[i], f.variance_profile[i]);
    out << line;
  }
}

}  // namespace imchaos
