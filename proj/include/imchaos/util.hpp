// Small numeric helpers shared across modules: pairwise reduction, sample
// statistics, robust slope fits, error types.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace imchaos {

using Complex = std::complex<double>;
using Vec2 = std::array<double, 2>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class ErrorCode {
  ConfigError,
  CoincidentPoints,
  OutsideDomain,
  FactorizationFailure,
  NonUniformGrid,
  BetaOutOfRange,
  UnresolvedSupport,
  UncoupledSchemes,
  NotComparable,
  NotMeanZero,
  NotEven,
  DegenerateWeights,
  BudgetExceeded,
  VarianceBlowup,
  InsufficientTail,
  InsufficientSamples,
  SizeMismatch,
  ChargeConfigInvalid,
  PointsTooClose,
  GridHitsEigenangle,
  NormalizerTooSmall,
  QuadratureDivergence,
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::NonUniformGrid: return "NonUniformGrid";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::UnresolvedSupport: return "UnresolvedSupport";
    case ErrorCode::UncoupledSchemes: return "UncoupledSchemes";
    case ErrorCode::NotComparable: return "NotComparable";
    case ErrorCode::NotMeanZero: return "NotMeanZero";
    case ErrorCode::NotEven: return "NotEven";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::VarianceBlowup: return "VarianceBlowup";
    case ErrorCode::InsufficientTail: return "InsufficientTail";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ChargeConfigInvalid: return "ChargeConfigInvalid";
    case ErrorCode::PointsTooClose: return "PointsTooClose";
    case ErrorCode::GridHitsEigenangle: return "GridHitsEigenangle";
    case ErrorCode::NormalizerTooSmall: return "NormalizerTooSmall";
    case ErrorCode::QuadratureDivergence: return "QuadratureDivergence";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define IMCHAOS_REQUIRE(cond, code, msg) \
  do {                                   \
    if (!(cond)) throw ::imchaos::Error(code, msg); \
  } while (0)

/// Pairwise summation: result independent of worker count because callers
/// always reduce a fully materialised, replica-ordered buffer.
template <typename T>
T pairwise_sum(std::span<const T> data) {
  if (data.size() <= 32) {
    T acc{};
    for (const T& v : data) acc += v;
    return acc;
  }
  const std::size_t half = data.size() / 2;
  return pairwise_sum(data.subspan(0, half)) + pairwise_sum(data.subspan(half));
}

template <typename T>
T pairwise_sum(const std::vector<T>& data) {
  return pairwise_sum(std::span<const T>(data));
}

struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double stderr_of_mean = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline SampleStats sample_stats(std::span<const double> xs) {
  SampleStats s;
  s.n = xs.size();
  if (s.n == 0) return s;
  s.mean = pairwise_sum(xs) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double m2 = 0, m3 = 0, m4 = 0;
  std::vector<double> d2(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - s.mean;
    d2[i] = d * d;
  }
  m2 = pairwise_sum<double>(d2) / static_cast<double>(s.n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - s.mean;
    m3 += d * d2[i];
    m4 += d2[i] * d2[i];
  }
  m3 /= static_cast<double>(s.n);
  m4 /= static_cast<double>(s.n);
  s.variance = m2 * static_cast<double>(s.n) / static_cast<double>(s.n - 1);
  s.stderr_of_mean = std::sqrt(s.variance / static_cast<double>(s.n));
  if (m2 > 0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

struct ComplexStats {
  std::size_t n = 0;
  Complex mean{0, 0};
  double stderr_of_mean = 0.0;  // sqrt(Var(Re)+Var(Im))/sqrt(n)
};

inline ComplexStats complex_stats(std::span<const Complex> zs) {
  ComplexStats s;
  s.n = zs.size();
  if (s.n == 0) return s;
  s.mean = pairwise_sum(zs) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double v = 0;
  for (const Complex& z : zs) v += std::norm(z - s.mean);
  v /= static_cast<double>(s.n - 1);
  s.stderr_of_mean = std::sqrt(v / static_cast<double>(s.n));
  return s;
}

/// Median of an unsorted sample (copies).
inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + mid - 1, xs.begin() + mid);
  return 0.5 * (hi + xs[mid - 1]);
}

/// Empirical quantile (linear interpolation on the sorted sample).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

/// Theil-Sen slope: median over all pairwise slopes. Robust against the
/// occasional wild point in tail and block-norm fits.
inline double theil_sen_slope(std::span<const double> x, std::span<const double> y) {
  IMCHAOS_REQUIRE(x.size() == y.size() && x.size() >= 2, ErrorCode::SizeMismatch,
                  "theil_sen_slope needs matched inputs of size >= 2");
  std::vector<double> slopes;
  slopes.reserve(x.size() * (x.size() - 1) / 2);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
  IMCHAOS_REQUIRE(!slopes.empty(), ErrorCode::SizeMismatch, "degenerate abscissae");
  return median(std::move(slopes));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  IMCHAOS_REQUIRE(x.size() == y.size() && x.size() >= 2, ErrorCode::SizeMismatch,
                  "least_squares_line needs matched inputs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

inline double harmonic_number(int n) {
  double h = 0.0;
  for (int k = 1; k <= n; ++k) h += 1.0 / k;
  return h;
}

inline double sqr(double x) { return x * x; }

inline double dist2d(const Vec2& a, const Vec2& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace imchaos
