// Electrostatic (Onsager-type) inequality checkers, the Gale-Shapley matching
// bound, the nearest-neighbour integral bound, and the functional-graph
// census from the appendix combinatorics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "imchaos/model.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/quad.hpp"
#include "imchaos/rng.hpp"
#include "imchaos/util.hpp"

namespace imchaos {

struct ChargeConfig {
  std::vector<Vec2> points;
  std::vector<int> charges;  // +-1
};

inline void validate_charge_config(const LogCorrelatedModel& model,
                                   const ChargeConfig& cfg) {
  IMCHAOS_REQUIRE(cfg.points.size() == cfg.charges.size() && !cfg.points.empty(),
                  ErrorCode::ChargeConfigInvalid, "points/charges mismatch");
  for (int q : cfg.charges)
    IMCHAOS_REQUIRE(q == 1 || q == -1, ErrorCode::ChargeConfigInvalid,
                    "charges must be +-1");
  for (std::size_t i = 0; i < cfg.points.size(); ++i) {
    IMCHAOS_REQUIRE(model.inside(cfg.points[i]), ErrorCode::ChargeConfigInvalid,
                    "point outside the domain");
    for (std::size_t j = i + 1; j < cfg.points.size(); ++j)
      IMCHAOS_REQUIRE(model.dist(cfg.points[i], cfg.points[j]) > 1e-9,
                      ErrorCode::ChargeConfigInvalid, "points too close");
  }
}

struct OnsagerMargin {
  double lhs = 0.0;       // - sum_{j<k} q_j q_k C(x_j, x_k)
  double rhs_base = 0.0;  // (1/2) sum_j log(1 / (min_k |x_j-x_k| / 2))
  double min_c = 0.0;     // smallest C with lhs <= rhs_base + C N
  int n = 0;
};

/// Per-configuration margin. The single-point configuration has an empty
/// nearest-neighbour min; by convention its rhs_base is 0, so min_c = 0.
inline OnsagerMargin onsager_margin(const LogCorrelatedModel& model,
                                    const ChargeConfig& cfg) {
  validate_charge_config(model, cfg);
  const std::size_t n = cfg.points.size();
  OnsagerMargin m;
  m.n = static_cast<int>(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k)
      m.lhs -= cfg.charges[j] * cfg.charges[k] *
               model.covariance(cfg.points[j], cfg.points[k]);
  for (std::size_t j = 0; j < n; ++j) {
    double nn = 1e300;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) nn = std::min(nn, model.dist(cfg.points[j], cfg.points[k]));
    if (nn < 1e300) m.rhs_base += 0.5 * std::log(1.0 / (0.5 * nn));
  }
  m.min_c = (m.lhs - m.rhs_base) / static_cast<double>(n);
  return m;
}

enum class OnsagerVariant { LocalD2C2g, LocalGeneralHd, GffGlobal };

struct OnsagerBatchReport {
  std::vector<int> n_values;          // bin centres
  std::vector<double> median_min_c;   // per bin
  double batch_c = 0.0;               // max over configs
  double slope_vs_n = 0.0;            // Theil-Sen of medians vs N
  std::size_t violations_at_batch_c = 0;
  std::size_t configs = 0;
};

/// Random-configuration batch. Points are drawn inside a compact subset for
/// the local variants, inside a small ball for the general-d variant, and
/// anywhere in the disc (with a boundary-concentrated component) for the
/// global GFF variant.
inline OnsagerBatchReport onsager_batch(const LogCorrelatedModel& model,
                                        OnsagerVariant variant, std::size_t n_configs,
                                        int n_max, std::uint64_t seed, int workers,
                                        double ball_radius = 0.15) {
  std::vector<double> min_cs(n_configs);
  std::vector<int> ns(n_configs);
  parallel_for(n_configs, workers, [&](std::size_t t) {
    Rng rng(seed, t);
    const int n = 1 + static_cast<int>(rng.uniform_index(n_max));
    ChargeConfig cfg;
    cfg.points.reserve(n);
    cfg.charges.reserve(n);
    while (static_cast<int>(cfg.points.size()) < n) {
      Vec2 p{0, 0};
      switch (variant) {
        case OnsagerVariant::LocalD2C2g: {
          if (model.domain == Domain::UnitDisc) {
            const double r = 0.8 * std::sqrt(rng.uniform());
            const double a = rng.uniform(0.0, kTwoPi);
            p = {r * std::cos(a), r * std::sin(a)};
          } else {
            p = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
          }
          break;
        }
        case OnsagerVariant::LocalGeneralHd: {
          if (model.domain == Domain::Circle) {
            p = {rng.uniform(-ball_radius, ball_radius), 0.0};
          } else {
            const double r = ball_radius * std::sqrt(rng.uniform());
            const double a = rng.uniform(0.0, kTwoPi);
            p = {r * std::cos(a), r * std::sin(a)};
          }
          break;
        }
        case OnsagerVariant::GffGlobal: {
          // half uniform in area, half concentrated near the boundary
          double r;
          if (rng.bernoulli(0.5))
            r = std::sqrt(rng.uniform());
          else
            r = 1.0 - 1e-3 * std::pow(10.0, rng.uniform(-2.0, 2.0));
          const double a = rng.uniform(0.0, kTwoPi);
          p = {r * std::cos(a), r * std::sin(a)};
          break;
        }
      }
      bool ok = model.inside(p);
      for (const Vec2& q : cfg.points)
        if (ok && model.dist(p, q) <= 2e-9) ok = false;
      if (!ok) continue;
      cfg.points.push_back(p);
      cfg.charges.push_back(rng.bernoulli(0.5) ? 1 : -1);
    }
    const auto m = onsager_margin(model, cfg);
    min_cs[t] = m.min_c;
    ns[t] = m.n;
  });

  OnsagerBatchReport rep;
  rep.configs = n_configs;
  rep.batch_c = *std::max_element(min_cs.begin(), min_cs.end());
  // bins: powers of two up to n_max
  std::map<int, std::vector<double>> bins;
  for (std::size_t i = 0; i < n_configs; ++i) {
    int b = 1;
    while (b * 2 <= ns[i]) b *= 2;
    bins[b].push_back(min_cs[i]);
  }
  for (auto& [b, vals] : bins) {
    if (vals.size() < 16) continue;
    rep.n_values.push_back(b);
    rep.median_min_c.push_back(median(vals));
  }
  // per-config min_c behaves like a + b/N; the O(N) statement is about the
  // large-N trend, so the slope is fitted over the upper dyadic bins
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < rep.n_values.size(); ++i)
    if (rep.n_values[i] * 8 >= n_max) {
      xs.push_back(static_cast<double>(rep.n_values[i]));
      ys.push_back(rep.median_min_c[i]);
    }
  if (xs.size() >= 2) rep.slope_vs_n = theil_sen_slope(xs, ys);
  for (std::size_t i = 0; i < n_configs; ++i)
    if (min_cs[i] > rep.batch_c + 1e-12) ++rep.violations_at_batch_c;
  return rep;
}

// ---------------------------------------------------------------------------
// Gale-Shapley matching bound (appendix moment inequality).

struct MatchingBoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::vector<std::size_t> greedy_matching;  // y_j -> index of matched x
};

/// Greedy closest-pair matching: repeatedly match the globally closest
/// remaining (x, y) pair.
inline std::vector<std::size_t> greedy_matching(const std::vector<Vec2>& xs,
                                                const std::vector<Vec2>& ys) {
  IMCHAOS_REQUIRE(ys.size() <= xs.size(), ErrorCode::SizeMismatch, "need b <= a");
  std::vector<std::size_t> match(ys.size(), SIZE_MAX);
  std::vector<bool> x_used(xs.size(), false), y_used(ys.size(), false);
  for (std::size_t round = 0; round < ys.size(); ++round) {
    double best = 1e300;
    std::size_t bi = 0, bj = 0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (y_used[j]) continue;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (x_used[i]) continue;
        const double d = dist2d(xs[i], ys[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    match[bj] = bi;
    x_used[bi] = true;
    y_used[bj] = true;
  }
  return match;
}

/// LHS = prod_{j<k}|x_j-x_k|^{b2} prod_{j<k}|y_j-y_k|^{b2} / prod |x_j-y_k|^{b2};
/// RHS sums C / prod |x_{f(j)} - y_j|^{b2} over all injective matchings with
/// C = 2^{min(b2, d)(a-1) b}.
inline MatchingBoundReport matching_bound_check(const std::vector<Vec2>& xs,
                                                const std::vector<Vec2>& ys,
                                                double beta, int dimension = 2) {
  const std::size_t a = xs.size(), b = ys.size();
  IMCHAOS_REQUIRE(b <= a && b >= 1, ErrorCode::SizeMismatch, "need a >= b >= 1");
  const double b2 = beta * beta;
  MatchingBoundReport rep;
  double log_lhs = 0.0;
  for (std::size_t j = 0; j < a; ++j)
    for (std::size_t k = j + 1; k < a; ++k) log_lhs += b2 * std::log(dist2d(xs[j], xs[k]));
  for (std::size_t j = 0; j < b; ++j)
    for (std::size_t k = j + 1; k < b; ++k) log_lhs += b2 * std::log(dist2d(ys[j], ys[k]));
  for (std::size_t j = 0; j < a; ++j)
    for (std::size_t k = 0; k < b; ++k) log_lhs -= b2 * std::log(dist2d(xs[j], ys[k]));
  rep.lhs = std::exp(log_lhs);

  const double cconst =
      std::pow(2.0, std::min(b2, static_cast<double>(dimension)) *
                        static_cast<double>(a - 1) * static_cast<double>(b));
  // enumerate every injective f: {1..b} -> {1..a} recursively
  std::vector<std::size_t> pick(b, 0);
  std::vector<bool> used(a, false);
  double rhs = 0.0;
  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == b) {
      double logterm = 0.0;
      for (std::size_t j = 0; j < b; ++j)
        logterm -= b2 * std::log(dist2d(xs[pick[j]], ys[j]));
      rhs += cconst * std::exp(logterm);
      return;
    }
    for (std::size_t i = 0; i < a; ++i) {
      if (used[i]) continue;
      used[i] = true;
      pick[depth] = i;
      self(self, depth + 1);
      used[i] = false;
    }
  };
  recurse(recurse, 0);
  rep.rhs = rhs;
  rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-12);
  rep.greedy_matching = greedy_matching(xs, ys);
  return rep;
}

// ---------------------------------------------------------------------------
// Nearest-neighbour integral bound.

struct NnIntegralReport {
  double integral = 0.0;
  double stderr_ = 0.0;
  double fitted_c = 0.0;  // (integral / N^{N b2 / 2d})^{1/N}
  int n = 0;
};

/// MC estimate of int_{B(0,1)^N} prod_j (min_k |x_j-x_k| / 2)^{-b2/2} and the
/// per-N constant in the bound c^N N^{N b2/(2d)}. The N=1 integrand uses the
/// empty-min convention factor 1, so the integral is vol(B(0,1)).
inline NnIntegralReport nn_integral_bound(int N, double beta, int d,
                                          std::size_t mc_points, std::uint64_t seed,
                                          int workers) {
  IMCHAOS_REQUIRE(N >= 1 && N <= 10 && (d == 1 || d == 2), ErrorCode::ConfigError,
                  "N <= 10, d in {1,2}");
  const double b2 = beta * beta;
  const double vol = d == 1 ? 2.0 : kPi;
  NnIntegralReport rep;
  rep.n = N;
  if (N == 1) {
    rep.integral = vol;
    rep.fitted_c = vol;
    return rep;
  }
  std::vector<double> vals(mc_points);
  parallel_for(mc_points, workers, [&](std::size_t t) {
    Rng rng(seed, t);
    std::vector<Vec2> pts(N);
    for (auto& p : pts) {
      if (d == 1) {
        p = {rng.uniform(-1.0, 1.0), 0.0};
      } else {
        double x, y;
        do {
          x = rng.uniform(-1.0, 1.0);
          y = rng.uniform(-1.0, 1.0);
        } while (x * x + y * y >= 1.0);
        p = {x, y};
      }
    }
    double logv = 0.0;
    for (int j = 0; j < N; ++j) {
      double nn = 1e300;
      for (int k = 0; k < N; ++k)
        if (k != j) nn = std::min(nn, dist2d(pts[j], pts[k]));
      logv += -0.5 * b2 * std::log(0.5 * nn);
    }
    vals[t] = std::exp(logv);
  });
  const auto st = sample_stats(vals);
  rep.integral = st.mean * std::pow(vol, N);
  rep.stderr_ = st.stderr_of_mean * std::pow(vol, N);
  rep.fitted_c = std::pow(
      rep.integral / std::pow(static_cast<double>(N),
                              static_cast<double>(N) * b2 / (2.0 * d)),
      1.0 / static_cast<double>(N));
  return rep;
}

/// Exact radial-reduction oracle for N=2, d=2, b2=1: the integral of
/// (|x1-x2|/2)^{-1} over B(0,1)^2 via the known pair-distance density.
inline double nn_integral_n2_d2_oracle(double b2) {
  // density of r = |x1 - x2| for two uniform points in the unit disc:
  // f(r) = (2 r / pi) (2 acos(r/2) - (r/2) sqrt(4 - r^2)), 0 <= r <= 2
  auto integrand = [b2](double r) {
    const double density =
        (2.0 * r / kPi) * (2.0 * std::acos(0.5 * r) - 0.5 * r * std::sqrt(4.0 - r * r));
    return std::pow(0.5 * r, -b2) * density;
  };
  const auto q = integrate_1d(integrand, 1e-12, 2.0, 1e-10);
  return kPi * kPi * q.value;  // vol(B)^2 times E[(r/2)^{-b2}]
}

// ---------------------------------------------------------------------------
// Nearest-neighbour functional-graph census.

struct NnGraphCensus {
  int n = 0;
  std::size_t configs = 0;
  std::size_t longest_cycle_seen = 0;           // must stay 2
  std::map<int, std::size_t> count_by_k;        // configurations per component count
  std::map<int, std::size_t> distinct_by_k;     // distinct labeled graphs per k
  std::map<int, double> formula_by_k;           // N! 2k N^{N-2k-1} / (2^k k! (N-2k)!)
  bool cycle_assertion_holds = true;
  bool count_bound_holds = true;
};

inline double nn_graph_count_formula(int N, int k) {
  auto fact = [](int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
  };
  return fact(N) * 2.0 * k * std::pow(static_cast<double>(N), N - 2 * k - 1) /
         (std::pow(2.0, k) * fact(k) * fact(N - 2 * k));
}

/// Builds the nearest-neighbour function F of random configurations in the
/// planar unit ball, decomposes its functional graph, asserts that every
/// cycle is a 2-cycle, and compares the number of distinct labeled graphs per
/// component count against the counting formula.
inline NnGraphCensus nn_graph_census(int N, std::size_t n_configs, std::uint64_t seed) {
  IMCHAOS_REQUIRE(N >= 2 && N <= 7, ErrorCode::ConfigError, "census needs 2 <= N <= 7");
  NnGraphCensus census;
  census.n = N;
  census.configs = n_configs;
  census.longest_cycle_seen = 2;
  std::map<int, std::set<std::uint64_t>> shapes;
  Rng rng(seed, 0);
  std::vector<Vec2> pts(N);
  std::vector<int> F(N), state(N);
  for (std::size_t t = 0; t < n_configs; ++t) {
    for (auto& p : pts) {
      double x, y;
      do {
        x = rng.uniform(-1.0, 1.0);
        y = rng.uniform(-1.0, 1.0);
      } while (x * x + y * y >= 1.0);
      p = {x, y};
    }
    for (int i = 0; i < N; ++i) {
      double best = 1e300;
      int arg = -1;
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        const double d = dist2d(pts[i], pts[j]);
        if (d < best) {
          best = d;
          arg = j;
        }
      }
      F[i] = arg;
    }
    // cycle lengths of the functional graph: walk until revisit
    std::fill(state.begin(), state.end(), -1);
    int k_components = 0;
    for (int start = 0; start < N; ++start) {
      if (state[start] != -1) continue;
      std::vector<int> path;
      int v = start;
      while (state[v] == -1) {
        state[v] = -2;  // on current path
        path.push_back(v);
        v = F[v];
      }
      if (state[v] == -2) {
        // found a new cycle; measure its length
        std::size_t pos = 0;
        while (path[pos] != v) ++pos;
        const std::size_t cycle_len = path.size() - pos;
        census.longest_cycle_seen = std::max(census.longest_cycle_seen, cycle_len);
        if (cycle_len != 2) census.cycle_assertion_holds = false;
        ++k_components;
      }
      for (int u : path) state[u] = 0;  // settled
    }
    ++census.count_by_k[k_components];
    std::uint64_t code = 0;
    for (int i = 0; i < N; ++i) code = code * 8 + static_cast<std::uint64_t>(F[i]);
    shapes[k_components].insert(code);
  }
  for (auto& [k, s] : shapes) {
    census.distinct_by_k[k] = s.size();
    census.formula_by_k[k] = nn_graph_count_formula(N, k);
    if (static_cast<double>(s.size()) > census.formula_by_k[k] + 0.5)
      census.count_bound_holds = false;
  }
  return census;
}

/// Exhaustive enumeration oracle: counts all functions F with F(i) != i whose
/// functional graph has all cycles of length 2 and exactly k components.
inline std::map<int, std::size_t> nn_graph_exhaustive_counts(int N) {
  std::map<int, std::size_t> counts;
  std::vector<int> F(N, 0);
  const long long total = static_cast<long long>(std::pow(N - 1, N));
  std::vector<int> digits(N, 0);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    for (int i = 0; i < N; ++i) {
      int v = static_cast<int>(c % (N - 1));
      c /= (N - 1);
      F[i] = v >= i ? v + 1 : v;  // skip the self-loop
    }
    // all cycles must be 2-cycles
    bool ok = true;
    int k = 0;
    std::vector<int> state(N, -1);
    for (int start = 0; start < N && ok; ++start) {
      if (state[start] != -1) continue;
      std::vector<int> path;
      int v = start;
      while (state[v] == -1) {
        state[v] = -2;
        path.push_back(v);
        v = F[v];
      }
      if (state[v] == -2) {
        std::size_t pos = 0;
        while (path[pos] != v) ++pos;
        if (path.size() - pos != 2) ok = false;
        ++k;
      }
      for (int u : path) state[u] = 0;
    }
    if (ok) ++counts[k];
  }
  return counts;
}

}  // namespace imchaos
