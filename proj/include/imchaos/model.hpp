// Log-correlated covariance models C(x,y) = log(1/|x-y|) + g(x,y) on the
// three built-in domains.
#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "imchaos/util.hpp"

namespace imchaos {

enum class Domain { UnitSquare, UnitDisc, Circle };

inline const char* domain_name(Domain d) {
  switch (d) {
    case Domain::UnitSquare: return "unit_square";
    case Domain::UnitDisc: return "unit_disc";
    case Domain::Circle: return "circle";
  }
  return "?";
}

/// Covariance model. Points are Vec2; the circle is parametrised by the angle
/// stored in component 0 (component 1 ignored) with chordal metric
/// |e^{i a} - e^{i b}|.
///
/// Built-ins:
///  - Circle: g == 0, C = -log|e^{ia}-e^{ib}|   (trace of the planar GFF).
///  - UnitDisc: GFF with zero boundary data, C = log|(1-x conj y)/(x-y)|,
///    so g(x,y) = log|1 - x conj y|.
///  - UnitSquare: the square (0,1)^2 carrying the Green's function of the
///    disc B((1/2,1/2),1) that contains it; g(x,y) = log|1 - w(x) conj w(y)|
///    with w(z) = z - (1/2,1/2). This gives a closed-form smooth g on the
///    square (it is not the square GFF, whose finite-mode covariance is
///    handled separately by the KL scheme).
struct LogCorrelatedModel {
  Domain domain = Domain::Circle;
  int dimension = 1;

  static LogCorrelatedModel circle() { return {Domain::Circle, 1}; }
  static LogCorrelatedModel unit_disc() { return {Domain::UnitDisc, 2}; }
  static LogCorrelatedModel unit_square() { return {Domain::UnitSquare, 2}; }

  bool inside(const Vec2& p) const {
    switch (domain) {
      case Domain::UnitSquare:
        return p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0;
      case Domain::UnitDisc:
        return p[0] * p[0] + p[1] * p[1] < 1.0;
      case Domain::Circle:
        return std::isfinite(p[0]);
    }
    return false;
  }

  /// Metric used in the log singularity.
  double dist(const Vec2& a, const Vec2& b) const {
    if (domain == Domain::Circle)
      return 2.0 * std::abs(std::sin(0.5 * (a[0] - b[0])));
    return dist2d(a, b);
  }

  double g(const Vec2& a, const Vec2& b) const {
    switch (domain) {
      case Domain::Circle:
        return 0.0;
      case Domain::UnitDisc: {
        const Complex x(a[0], a[1]), y(b[0], b[1]);
        return std::log(std::abs(1.0 - x * std::conj(y)));
      }
      case Domain::UnitSquare: {
        const Complex x(a[0] - 0.5, a[1] - 0.5), y(b[0] - 0.5, b[1] - 0.5);
        return std::log(std::abs(1.0 - x * std::conj(y)));
      }
    }
    return 0.0;
  }

  /// C(x,y) = log(1/dist) + g. Throws on coincident or exterior points.
  double covariance(const Vec2& a, const Vec2& b) const {
    IMCHAOS_REQUIRE(inside(a) && inside(b), ErrorCode::OutsideDomain,
                    "covariance asked outside the open domain");
    const double r = dist(a, b);
    IMCHAOS_REQUIRE(r >= 1e-14, ErrorCode::CoincidentPoints,
                    "covariance is singular on the diagonal");
    return -std::log(r) + g(a, b);
  }

  /// g on the diagonal (finite); used by the critical-limit target.
  double g_diag(const Vec2& a) const { return g(a, a); }
};

}  // namespace imchaos
