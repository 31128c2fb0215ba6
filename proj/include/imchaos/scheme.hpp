// Field approximation schemes and their analytic covariance kernels.
//
// Every scheme exposes cov_n / var_n in closed form (series or mollified
// kernel), which is what the oracle-style checks integrate against; sampling
// never defines the kernels.
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "imchaos/model.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

enum class SchemeKind : unsigned char {
  CircleFourier = 1,   // truncation of the Fourier series at n modes
  CircleFejer = 2,     // triangular (n-k)/n weights, same modes
  CircleSmoothed = 3,  // truncation convolved with a periodic bump of width eps
  SquareKL = 4,        // Laplacian eigenfunction expansion on the unit square
  Convolution = 5,     // mollification at scale eps (planar domains)
  Cue = 6,             // random-matrix field (tag used in containers only)
};

inline const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::CircleFourier: return "circle_fourier";
    case SchemeKind::CircleFejer: return "circle_fejer";
    case SchemeKind::CircleSmoothed: return "circle_smoothed";
    case SchemeKind::SquareKL: return "square_kl";
    case SchemeKind::Convolution: return "convolution";
    case SchemeKind::Cue: return "cue";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Mollifier: eta(x) ∝ (1-|x|^2)^4 on |x|<1, unit mass, radially symmetric.

inline double bump_profile_2d(double r) {
  if (r >= 1.0) return 0.0;
  const double t = 1.0 - r * r;
  const double t2 = t * t;
  return (5.0 / kPi) * t2 * t2;
}

inline double bump_profile_1d(double u) {
  if (std::abs(u) >= 1.0) return 0.0;
  const double t = 1.0 - u * u;
  const double t2 = t * t;
  return (315.0 / 256.0) * t2 * t2;
}

namespace detail {

// 64-point Gauss-Legendre nodes/weights on [-1,1], generated by Newton
// iteration on the Legendre recurrence at first use.
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = xi;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
        const double dx = p1 / dp;
        xi -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      double p0 = 1.0, p1 = xi;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      x[i] = xi;
      w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
  }
};

inline const GaussLegendre& gl64() {
  static const GaussLegendre g(64);
  return g;
}

/// Radial profile of the planar convolution (eta * eta_lambda)(rho e1),
/// lambda = ratio of the two widths, lambda <= 1, support rho < 1 + lambda.
inline double bump_selfconv_profile(double rho, double lambda) {
  if (rho >= 1.0 + lambda) return 0.0;
  const auto& g = gl64();
  // integral over the small bump's support: u = lambda * v, |v| < 1
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(g.x.size()); ++i) {
    const double r = 0.5 * (g.x[i] + 1.0);  // radius in [0,1]
    const double wr = 0.5 * g.w[i];
    const double etas = bump_profile_2d(r) * r;
    if (etas == 0.0) continue;
    double inner = 0.0;
    for (int j = 0; j < static_cast<int>(g.x.size()); ++j) {
      const double phi = kPi * (g.x[j] + 1.0) * 0.5;  // [0, pi], symmetric
      const double wphi = kPi * 0.5 * g.w[j];
      const double d2 =
          rho * rho + lambda * lambda * r * r - 2.0 * rho * lambda * r * std::cos(phi);
      inner += 2.0 * wphi * bump_profile_2d(std::sqrt(std::max(0.0, d2)));
    }
    acc += wr * etas * inner;
  }
  // substitution u = lambda v cancels the lambda^{-2} in eta_lambda
  return acc;
}

/// Tables for Lambda_lambda(t) = -(etatilde_lambda * log|.|)(t e1) where
/// etatilde_lambda = eta * eta_lambda (unit mass). Uses the circle-mean
/// identity: mean of log|t e1 - u| over |u| = s equals log max(t, s).
class ConvLogTable {
 public:
  explicit ConvLogTable(double lambda) : lambda_(lambda), rmax_(1.0 + lambda) {
    const int n = 2048;
    mass_.resize(n + 1);
    logmom_.resize(n + 1);
    // radial mass density m(s) = 2 pi s * profile(s)
    std::vector<double> m(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double s = rmax_ * i / n;
      m[i] = kTwoPi * s * bump_selfconv_profile(s, lambda);
    }
    mass_[0] = 0.0;
    logmom_[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double s0 = rmax_ * (i - 1) / n, s1 = rmax_ * i / n;
      const double h = s1 - s0;
      mass_[i] = mass_[i - 1] + 0.5 * h * (m[i - 1] + m[i]);
      // s log s is integrable at 0; trapezoid with the limit value 0 at s=0.
      const double f0 = (s0 == 0.0) ? 0.0 : m[i - 1] * std::log(s0);
      const double f1 = m[i] * std::log(s1);
      logmom_[i] = logmom_[i - 1] + 0.5 * h * (f0 + f1);
    }
    // normalise the numerical mass to exactly one
    const double total = mass_.back();
    for (auto& v : mass_) v /= total;
    for (auto& v : logmom_) v /= total;
  }

  /// Lambda(t) = -[ M(t) log t + (T(rmax) - T(t)) ], exact -log t for t >= rmax.
  double lambda_of(double t) const {
    if (t >= rmax_) return -std::log(t);
    const int n = static_cast<int>(mass_.size()) - 1;
    const double pos = t / rmax_ * n;
    const int i = std::min(n - 1, static_cast<int>(pos));
    const double fr = pos - i;
    const double M = mass_[i] * (1 - fr) + mass_[i + 1] * fr;
    const double T = logmom_[i] * (1 - fr) + logmom_[i + 1] * fr;
    const double logt = (t <= 1e-300) ? 0.0 : std::log(t);  // M(0)=0 kills it
    return -(M * logt + (logmom_.back() - T));
  }

 private:
  double lambda_, rmax_;
  std::vector<double> mass_, logmom_;
};

inline const ConvLogTable& conv_log_table(double lambda) {
  static std::map<long long, std::unique_ptr<ConvLogTable>> cache;
  static std::mutex mu;
  const long long key = std::llround(lambda * 1e9);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<ConvLogTable>(lambda)).first;
  return *it->second;
}

/// Fourier coefficient of the width-eps 1-d bump: int eta_1(u) cos(k eps u) du.
inline double bump_fourier_1d(int k, double eps) {
  const auto& g = gl64();
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(g.x.size()); ++i)
    acc += g.w[i] * bump_profile_1d(g.x[i]) * std::cos(k * eps * g.x[i]);
  return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Circle schemes: everything is a coefficient multiplier w_k on the mode-k
// term, Cov_n(dtheta) = sum_k w_k^2 cos(k dtheta)/k.

struct CircleScheme {
  SchemeKind kind = SchemeKind::CircleFourier;
  int n_modes = 0;
  double eps = 0.0;
  double cutoff = 0.0;
  std::vector<double> weight;  // weight[k-1] = w_k

  double variance() const {
    double v = 0.0;
    for (int k = 1; k <= n_modes; ++k) v += sqr(weight[k - 1]) / k;
    return v;
  }

  double cov(double dtheta) const {
    // Clenshaw recurrence for sum c_k cos(k x)
    const double c = std::cos(dtheta);
    double b1 = 0.0, b2 = 0.0;
    for (int k = n_modes; k >= 1; --k) {
      const double b0 = sqr(weight[k - 1]) / k + 2.0 * c * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return b1 * c - b2;
  }

  static double cross_cov(const CircleScheme& a, const CircleScheme& b, double dtheta) {
    const int n = std::min(a.n_modes, b.n_modes);
    const double c = std::cos(dtheta);
    double b1 = 0.0, b2 = 0.0;
    for (int k = n; k >= 1; --k) {
      const double b0 = a.weight[k - 1] * b.weight[k - 1] / k + 2.0 * c * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return b1 * c - b2;
  }
};

inline CircleScheme circle_fourier_scheme(int n) {
  IMCHAOS_REQUIRE(n >= 1, ErrorCode::ConfigError, "n_modes >= 1");
  CircleScheme s;
  s.kind = SchemeKind::CircleFourier;
  s.n_modes = n;
  s.cutoff = 1.0 / n;
  s.weight.assign(n, 1.0);
  return s;
}

inline CircleScheme circle_fejer_scheme(int n) {
  IMCHAOS_REQUIRE(n >= 1, ErrorCode::ConfigError, "n_modes >= 1");
  CircleScheme s;
  s.kind = SchemeKind::CircleFejer;
  s.n_modes = n;
  s.cutoff = 1.0 / n;
  s.weight.resize(n);
  for (int k = 1; k <= n; ++k)
    s.weight[k - 1] = std::sqrt(static_cast<double>(n - k) / n);
  return s;
}

inline CircleScheme circle_smoothed_scheme(int n, double eps) {
  IMCHAOS_REQUIRE(n >= 1 && eps > 0, ErrorCode::ConfigError, "n >= 1, eps > 0");
  CircleScheme s;
  s.kind = SchemeKind::CircleSmoothed;
  s.n_modes = n;
  s.eps = eps;
  s.cutoff = std::max(eps, 1.0 / n);
  s.weight.resize(n);
  for (int k = 1; k <= n; ++k) s.weight[k - 1] = detail::bump_fourier_1d(k, eps);
  return s;
}

// ---------------------------------------------------------------------------
// Square KL scheme: eigenpairs of -Laplace on (0,1)^2, phi_{kl}(x) =
// 2 sin(k pi x) sin(l pi y), lambda_{kl} = pi^2 (k^2 + l^2).

struct SquareKLScheme {
  int max_mode = 0;   // k,l = 1..max_mode (rectangular truncation)
  bool by_eigen = false;  // true: keep the first n_terms eigenpairs by lambda
  int n_terms = 0;
  std::vector<std::pair<int, int>> order;  // filled when by_eigen
  double cutoff = 0.0;
};

inline SquareKLScheme square_kl_scheme(int max_mode) {
  IMCHAOS_REQUIRE(max_mode >= 1, ErrorCode::ConfigError, "max_mode >= 1");
  SquareKLScheme s;
  s.max_mode = max_mode;
  s.cutoff = 1.0 / max_mode;
  return s;
}

/// First n eigenpairs ordered by eigenvalue (ties broken lexicographically):
/// the martingale truncation of the KL series.
inline SquareKLScheme square_kl_scheme_by_eigenvalue(int n_terms) {
  IMCHAOS_REQUIRE(n_terms >= 0, ErrorCode::ConfigError, "n_terms >= 0");
  SquareKLScheme s;
  s.by_eigen = true;
  s.n_terms = n_terms;
  const int box = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * n_terms))) + 2);
  for (int k = 1; k <= box; ++k)
    for (int l = 1; l <= box; ++l) s.order.emplace_back(k, l);
  std::sort(s.order.begin(), s.order.end(), [](auto& a, auto& b) {
    const long la = a.first * a.first + a.second * a.second;
    const long lb = b.first * b.first + b.second * b.second;
    return la != lb ? la < lb : a < b;
  });
  s.order.resize(n_terms);
  s.max_mode = box;
  long lmax = 1;
  for (auto& [k, l] : s.order) lmax = std::max<long>(lmax, k * k + l * l);
  s.cutoff = n_terms == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(lmax));
  return s;
}

inline double square_kl_cov(const SquareKLScheme& s, const Vec2& a, const Vec2& b) {
  double acc = 0.0;
  auto term = [&](int k, int l) {
    const double lam = kPi * kPi * (k * k + l * l);
    return 4.0 / lam * std::sin(k * kPi * a[0]) * std::sin(l * kPi * a[1]) *
           std::sin(k * kPi * b[0]) * std::sin(l * kPi * b[1]);
  };
  if (s.by_eigen) {
    for (auto& [k, l] : s.order) acc += term(k, l);
  } else {
    for (int k = 1; k <= s.max_mode; ++k)
      for (int l = 1; l <= s.max_mode; ++l) acc += term(k, l);
  }
  return acc;
}

inline double square_kl_var(const SquareKLScheme& s, const Vec2& a) {
  return square_kl_cov(s, a, a);
}

// ---------------------------------------------------------------------------
// Planar convolution scheme. Needs an interior margin of eps so the
// circle-mean identities for the log kernel and the (harmonic) g hold.

struct ConvolutionScheme {
  double eps = 0.0;
};

inline double conv_margin_ok(const LogCorrelatedModel& model, const Vec2& p, double eps) {
  switch (model.domain) {
    case Domain::UnitDisc:
      return std::hypot(p[0], p[1]) <= 1.0 - eps;
    case Domain::UnitSquare:
      return p[0] >= eps && p[0] <= 1 - eps && p[1] >= eps && p[1] <= 1 - eps;
    default:
      return false;
  }
}

/// E X_eps(x) X_delta(y), exact up to the table resolution (g is harmonic in
/// each variable for the built-in planar models, so only the log part needs
/// the mollified table).
inline double conv_cross_cov(const LogCorrelatedModel& model, double eps, double delta,
                             const Vec2& a, const Vec2& b) {
  IMCHAOS_REQUIRE(model.dimension == 2, ErrorCode::NotComparable,
                  "convolution scheme is planar");
  const double big = std::max(eps, delta), small = std::min(eps, delta);
  IMCHAOS_REQUIRE(conv_margin_ok(model, a, big) && conv_margin_ok(model, b, big),
                  ErrorCode::OutsideDomain,
                  "convolution covariance needs an interior margin of eps");
  const double lambda = small / big;
  const double r = dist2d(a, b);
  const auto& table = detail::conv_log_table(lambda);
  return std::log(1.0 / big) + table.lambda_of(r / big) + model.g(a, b);
}

inline double conv_cov(const LogCorrelatedModel& model, double eps, const Vec2& a,
                       const Vec2& b) {
  return conv_cross_cov(model, eps, eps, a, b);
}

inline double conv_var(const LogCorrelatedModel& model, double eps, const Vec2& a) {
  return conv_cov(model, eps, a, a);
}

}  // namespace imchaos
