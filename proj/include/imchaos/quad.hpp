// Deterministic integration: adaptive Gauss-Kronrod in 1-d, Genz-Malik
// adaptive cubature in 2..8 dims, tanh-sinh for endpoint singularities, and a
// rank-1 lattice rule with an embedded error estimate for high dimensions.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "imchaos/rng.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// 1-d adaptive Gauss-Kronrod (7-15 pair).

namespace detail {
inline constexpr double kGK15X[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGK15W[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kG7W[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gk15(F&& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = 0.0, g = 0.0;
  const double fc = f(c);
  k += fc * kGK15W[7];
  g += fc * kG7W[3];
  for (int i = 0; i < 7; ++i) {
    const double x = kGK15X[i] * h;
    const double fsum = f(c - x) + f(c + x);
    k += fsum * kGK15W[i];
    if (i % 2 == 1) g += fsum * kG7W[i / 2];
  }
  value = k * h;
  error = std::abs((k - g) * h);
}
}  // namespace detail

template <typename F>
QuadResult integrate_1d(F&& f, double a, double b, double rel_tol = 1e-8,
                        double abs_tol = 0.0, std::size_t max_evals = 200000) {
  struct Seg {
    double a, b, value, error;
    bool operator<(const Seg& o) const { return error < o.error; }
  };
  std::priority_queue<Seg> heap;
  QuadResult res;
  double v, e;
  detail::gk15(f, a, b, v, e);
  res.evals = 15;
  heap.push({a, b, v, e});
  double total = v, toterr = e;
  while (toterr > std::max(abs_tol, rel_tol * std::abs(total)) &&
         res.evals + 30 <= max_evals && heap.top().error > 0) {
    const Seg worst = heap.top();
    heap.pop();
    total -= worst.value;
    toterr -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    Seg left{worst.a, mid, 0, 0}, right{mid, worst.b, 0, 0};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    res.evals += 30;
    total += left.value + right.value;
    toterr += left.error + right.error;
    heap.push(left);
    heap.push(right);
  }
  res.value = total;
  res.error = toterr;
  res.converged = toterr <= std::max(abs_tol, rel_tol * std::abs(total));
  return res;
}

/// tanh-sinh rule on (a,b); handles integrable endpoint singularities.
template <typename F>
QuadResult tanh_sinh_1d(F&& f, double a, double b, int max_level = 12,
                        double rel_tol = 1e-10) {
  const double c = 0.5 * (a + b), h0 = 0.5 * (b - a);
  const double tmax = 4.0;
  QuadResult res;
  auto g = [&](double t) {
    const double st = std::sinh(t);
    const double x = std::tanh(0.5 * kPi * st);
    if (1.0 - std::abs(x) < 1e-17) return 0.0;
    const double w = 0.5 * kPi * std::cosh(t) / sqr(std::cosh(0.5 * kPi * st));
    ++res.evals;
    return w * (t == 0.0 ? f(c) : f(c + h0 * x) + f(c - h0 * x));
  };
  double prev = 0.0, acc = 0.0;
  for (int lvl = 3; lvl <= max_level; ++lvl) {
    const double h = std::ldexp(1.0, -lvl);
    double sum = g(0.0);
    for (double t = h; t <= tmax; t += h) sum += g(t);
    prev = acc;
    acc = h * sum;
    if (lvl > 4 && std::abs(acc - prev) < rel_tol * std::abs(acc)) {
      res.value = acc * h0;
      res.error = std::abs(acc - prev) * h0;
      res.converged = true;
      return res;
    }
  }
  res.value = acc * h0;
  res.error = std::abs(acc - prev) * h0;
  res.converged = res.error < 1e-7 * std::abs(res.value);
  return res;
}

// ---------------------------------------------------------------------------
// Genz-Malik degree-7 cubature with embedded degree-5 error estimate,
// adaptive region bisection, dimensions 2..15.

template <typename F>
QuadResult genz_malik(F&& f, const std::vector<double>& lo, const std::vector<double>& hi,
                      double rel_tol, double abs_tol, std::size_t max_evals) {
  const std::size_t d = lo.size();
  IMCHAOS_REQUIRE(d >= 2 && d <= 15 && hi.size() == d, ErrorCode::ConfigError,
                  "genz_malik supports 2 <= dim <= 15");
  const double l2 = std::sqrt(9.0 / 70.0), l4 = std::sqrt(9.0 / 10.0),
               l5 = std::sqrt(9.0 / 19.0);
  const double dd = static_cast<double>(d);
  const double w1 = (12824.0 - (9120.0 - 400.0 * dd) * dd) / 19683.0;
  const double w2 = 980.0 / 6561.0;
  const double w3 = (1820.0 - 400.0 * dd) / 19683.0;
  const double w4 = 200.0 / 19683.0;
  const double w5 = 6859.0 / 19683.0 / static_cast<double>(1ULL << d);
  const double e1 = (729.0 - 50.0 * (19.0 - dd) * dd) / 729.0;
  const double e2 = 245.0 / 486.0;
  const double e3 = (265.0 - 100.0 * dd) / 1458.0;
  const double e4 = 25.0 / 729.0;
  const double ratio = (l2 * l2) / (l4 * l4);

  struct Region {
    std::vector<double> center, half;
    double value = 0, error = 0;
    std::size_t split_dim = 0;
    bool operator<(const Region& o) const { return error < o.error; }
  };

  std::size_t evals_per_region = 1 + 4 * d + 2 * d * (d - 1) + (1ULL << d);
  QuadResult res;

  auto evaluate = [&](Region& r) {
    std::vector<double> p(r.center);
    double vol = 1.0;
    for (std::size_t i = 0; i < d; ++i) vol *= 2.0 * r.half[i];
    const double v0 = f(p);
    double sum2 = 0, sum3 = 0, sum4 = 0, sum5 = 0;
    double max_diff = -1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = r.center[i], hi_i = r.half[i];
      p[i] = ci - l2 * hi_i;
      const double va = f(p);
      p[i] = ci + l2 * hi_i;
      const double vb = f(p);
      p[i] = ci - l4 * hi_i;
      const double vc = f(p);
      p[i] = ci + l4 * hi_i;
      const double vd = f(p);
      p[i] = ci;
      sum2 += va + vb;
      sum3 += vc + vd;
      const double diff = std::abs(va + vb - 2 * v0 - ratio * (vc + vd - 2 * v0));
      if (diff > max_diff) {
        max_diff = diff;
        r.split_dim = i;
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        for (int si = -1; si <= 1; si += 2)
          for (int sj = -1; sj <= 1; sj += 2) {
            p[i] = r.center[i] + si * l4 * r.half[i];
            p[j] = r.center[j] + sj * l4 * r.half[j];
            sum4 += f(p);
            p[i] = r.center[i];
            p[j] = r.center[j];
          }
    for (std::size_t corner = 0; corner < (1ULL << d); ++corner) {
      for (std::size_t i = 0; i < d; ++i)
        p[i] = r.center[i] + ((corner >> i) & 1 ? l5 : -l5) * r.half[i];
      sum5 += f(p);
    }
    // weights are normalised to sum to one against the counts, so the rule is
    // vol times the weighted average; the degree-5 companion gives the error
    r.value = vol * (w1 * v0 + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
    const double res5 = vol * (e1 * v0 + e2 * sum2 + e3 * sum3 + e4 * sum4);
    r.error = std::abs(res5 - r.value);
  };

  Region root;
  root.center.resize(d);
  root.half.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    root.center[i] = 0.5 * (lo[i] + hi[i]);
    root.half[i] = 0.5 * (hi[i] - lo[i]);
  }
  evaluate(root);
  res.evals = evals_per_region;
  std::priority_queue<Region> heap;
  double total = root.value, toterr = root.error;
  heap.push(std::move(root));

  while (toterr > std::max(abs_tol, rel_tol * std::abs(total)) &&
         res.evals + 2 * evals_per_region <= max_evals) {
    Region worst = heap.top();
    heap.pop();
    total -= worst.value;
    toterr -= worst.error;
    Region left = worst, right = worst;
    const std::size_t sd = worst.split_dim;
    left.half[sd] *= 0.5;
    right.half[sd] *= 0.5;
    left.center[sd] -= left.half[sd];
    right.center[sd] += right.half[sd];
    evaluate(left);
    evaluate(right);
    res.evals += 2 * evals_per_region;
    total += left.value + right.value;
    toterr += left.error + right.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }
  res.value = total;
  res.error = toterr;
  res.converged = toterr <= std::max(abs_tol, rel_tol * std::abs(total));
  return res;
}

// ---------------------------------------------------------------------------
// Rank-1 lattice rule (Korobov generating vector) with an embedded estimate
// from comparing the half lattice against the full one. Deterministic.

template <typename F>
QuadResult lattice_rule(F&& f, std::size_t dim, std::size_t n_points) {
  // fixed deterministic shift: fractional parts of sqrt(primes)
  static const double primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                  41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
  IMCHAOS_REQUIRE(dim <= 24, ErrorCode::ConfigError, "lattice rule supports dim <= 24");
  // Korobov construction with a = 17797 modulo n (good generic generator for
  // n around 2^16..2^21); n forced odd.
  std::size_t n = n_points | 1;
  const unsigned long long a = 17797ULL;
  std::vector<double> gen(dim), shift(dim);
  unsigned long long ak = 1;
  for (std::size_t j = 0; j < dim; ++j) {
    gen[j] = static_cast<double>(ak % n) / static_cast<double>(n);
    ak = (ak * a) % n;
    double intpart;
    shift[j] = std::modf(std::sqrt(primes[j]), &intpart);
  }
  std::vector<double> x(dim);
  double sum_full = 0.0, sum_half = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      double v = std::fmod(static_cast<double>(i) * gen[j] + shift[j], 1.0);
      x[j] = v;
    }
    const double fv = f(x);
    sum_full += fv;
    if (i % 2 == 0) sum_half += fv;
  }
  QuadResult res;
  res.value = sum_full / static_cast<double>(n);
  const double half = sum_half / static_cast<double>((n + 1) / 2);
  res.error = std::abs(res.value - half);
  res.evals = n;
  res.converged = true;
  return res;
}

// ---------------------------------------------------------------------------
// Halton sequence with a Cranley-Patterson shift for randomised QMC.

inline double halton_point(std::size_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  std::size_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

struct HaltonSampler {
  std::vector<unsigned> bases;
  std::vector<double> shift;

  HaltonSampler(std::size_t dim, Rng& rng) {
    static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                      41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
    IMCHAOS_REQUIRE(dim <= 24, ErrorCode::ConfigError, "Halton supports dim <= 24");
    bases.assign(primes, primes + dim);
    shift.resize(dim);
    for (auto& s : shift) s = rng.uniform();
  }

  void point(std::size_t index, std::vector<double>& out) const {
    out.resize(bases.size());
    for (std::size_t j = 0; j < bases.size(); ++j) {
      double v = halton_point(index + 1, bases[j]) + shift[j];
      out[j] = v - std::floor(v);
    }
  }
};

}  // namespace imchaos
