// Built-in test functions: smooth bump, mollified plateau, and the conformal
// spin weight on the disc.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>

#include "imchaos/util.hpp"

namespace imchaos {

struct TestFunction {
  std::string name;
  std::function<double(const Vec2&)> eval;
  double linf = 1.0;          // recorded sup norm
  double support_radius = 0;  // metric radius of the support around `center`
  Vec2 center{0, 0};

  double operator()(const Vec2& p) const { return eval(p); }
};

/// exp(1 - 1/(1-t^2)) bump, equal to 1 at the center, supported on |x-c| < R.
inline TestFunction bump_function(Vec2 center, double radius, double amplitude = 1.0) {
  TestFunction f;
  f.name = "bump";
  f.center = center;
  f.support_radius = radius;
  f.linf = std::abs(amplitude);
  f.eval = [center, radius, amplitude](const Vec2& p) {
    const double t = dist2d(p, center) / radius;
    if (t >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - t * t));
  };
  return f;
}

/// Circle bump in the angle variable, supported on |theta - c| < R (mod 2pi).
inline TestFunction circle_bump(double center, double radius, double amplitude = 1.0) {
  TestFunction f;
  f.name = "circle_bump";
  f.center = {center, 0};
  f.support_radius = radius;
  f.linf = std::abs(amplitude);
  f.eval = [center, radius, amplitude](const Vec2& p) {
    double d = std::remainder(p[0] - center, kTwoPi);
    const double t = d / radius;
    if (std::abs(t) >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - t * t));
  };
  return f;
}

/// Constant one on the whole circle. The circle is compact, so this is a
/// legitimate smooth test function there (unlike on domains with boundary).
inline TestFunction circle_one() {
  TestFunction f;
  f.name = "one";
  f.support_radius = kPi;
  f.linf = 1.0;
  f.eval = [](const Vec2&) { return 1.0; };
  return f;
}

/// Mollified indicator: 1 on dist <= r0, cosine ramp down to 0 at r1.
inline TestFunction mollified_plateau(Vec2 center, double r0, double r1) {
  TestFunction f;
  f.name = "plateau";
  f.center = center;
  f.support_radius = r1;
  f.linf = 1.0;
  f.eval = [center, r0, r1](const Vec2& p) {
    const double d = dist2d(p, center);
    if (d <= r0) return 1.0;
    if (d >= r1) return 0.0;
    const double t = (d - r0) / (r1 - r0);
    return 0.5 * (1.0 + std::cos(kPi * t));
  };
  return f;
}

/// Conformal map of the unit disc onto the upper half plane, phi(0) = i.
inline Complex disc_to_halfplane(Complex z) {
  return Complex(0, 1) * (1.0 - z) / (1.0 + z);
}

/// |phi'(z)| / (2 Im phi(z)) = 1 / (1 - |z|^2) on the disc.
inline double disc_conformal_radius_factor(const Vec2& p) {
  const double r2 = p[0] * p[0] + p[1] * p[1];
  return 1.0 / (1.0 - r2);
}

/// f(x) * (2 |phi'| / Im phi)^{1/4} — the spin weight that appears in the
/// XOR-Ising scaling limit on the disc.
inline TestFunction chi_weighted(const TestFunction& f) {
  TestFunction g;
  g.name = f.name + "_chi_weighted";
  g.center = f.center;
  g.support_radius = f.support_radius;
  auto base = f.eval;
  g.eval = [base](const Vec2& p) {
    const double w = std::pow(4.0 * disc_conformal_radius_factor(p), 0.25);
    return base(p) * w;
  };
  // sup over the support; the factor grows toward the boundary
  const double edge = std::min(0.999, dist2d(f.center, {0, 0}) + f.support_radius);
  g.linf = f.linf * std::pow(4.0 / (1.0 - edge * edge), 0.25);
  return g;
}

}  // namespace imchaos
