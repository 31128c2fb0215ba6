#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "imchaos/chaos.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/sine_gordon.hpp"
#include "imchaos/util.hpp"

using namespace imchaos;

namespace {

// Test-only quadrature oracle for E|mu_n(f)|^2 on the circle: double sum of
// f(x) f(y) exp(beta^2 Cov_n(x-y)) over a fine uniform grid. Independent of
// the sampling path (it never touches Rng or the FFT synthesis).
double second_moment_quadrature(const CircleScheme& scheme, double beta,
                                const TestFunction& f, int q = 2048) {
  std::vector<double> fv(q), cov(q);
  for (int j = 0; j < q; ++j) {
    fv[j] = f(Vec2{kTwoPi * j / q, 0.0});
    cov[j] = scheme.cov(kTwoPi * j / q);
  }
  // reduce over the difference variable
  std::vector<double> autocorr(q, 0.0);
  for (int d = 0; d < q; ++d) {
    double acc = 0.0;
    for (int j = 0; j < q; ++j) acc += fv[j] * fv[(j + d) % q];
    autocorr[d] = acc;
  }
  double total = 0.0;
  for (int d = 0; d < q; ++d) total += autocorr[d] * std::exp(beta * beta * cov[d]);
  const double cell = kTwoPi / q;
  return total * cell * cell;
}

}  // namespace

TEST_CASE("build_chaos basics") {
  const auto field = sample_circle_field(32, uniform_circle_grid(64), 12);

  SECTION("beta -> 0 gives values near 1") {
    const auto chaos = build_chaos(field, 1e-9, true);
    for (const auto& v : chaos.values) {
      CHECK(std::abs(v - Complex(1, 0)) < 1e-6);
    }
  }
  SECTION("compensator exactness: log|mu| = (beta^2/2) Var to 1e-12") {
    const double beta = 0.8;
    const auto chaos = build_chaos(field, beta);
    for (std::size_t i = 0; i < chaos.values.size(); ++i)
      CHECK(std::abs(std::log(std::abs(chaos.values[i])) -
                     0.5 * beta * beta * field.variance_profile[i]) < 1e-12);
  }
  SECTION("conjugation symmetry under beta -> -beta") {
    const auto plus = build_chaos(field, 0.6);
    const auto minus = build_chaos(field, -0.6, true);
    for (std::size_t i = 0; i < plus.values.size(); ++i)
      CHECK(std::abs(minus.values[i] - std::conj(plus.values[i])) < 1e-12);
  }
  SECTION("supercritical beta refused without force") {
    CHECK_THROWS_AS(build_chaos(field, 1.5), Error);
    CHECK_NOTHROW(build_chaos(field, 1.5, true));
  }
}

TEST_CASE("pairing") {
  const auto field = sample_circle_field(64, uniform_circle_grid(256), 5);
  const auto chaos = build_chaos(field, 0.5);
  const double w = circle_cell_weight(256);

  SECTION("f == 0 pairs to zero") {
    TestFunction zero;
    zero.name = "zero";
    zero.eval = [](const Vec2&) { return 0.0; };
    CHECK_THROWS_AS(pair(chaos, zero, w), Error);  // nothing in support
  }
  SECTION("unresolved support rejected") {
    const auto tiny = circle_bump(1.0, 0.01);
    CHECK_THROWS_AS(pair(chaos, tiny, w), Error);
  }
  SECTION("MC mean of mu_n(theta0) is 1 within 4 sigma (10^5 replicas)") {
    const int n = 256;
    const auto scheme = circle_fourier_scheme(n);
    const std::size_t reps = 100000;
    std::vector<Complex> vals(reps);
    const double comp = std::exp(0.5 * 0.25 * scheme.variance());
    parallel_for(reps, default_workers(), [&](std::size_t r) {
      Rng rng(3131, r);
      const auto modes = draw_circle_modes(n, rng);
      const auto v = eval_circle_field(scheme, modes, {0.7});
      vals[r] = comp * std::polar(1.0, 0.5 * v[0]);
    });
    const auto st = complex_stats(vals);
    CHECK(std::abs(st.mean - Complex(1, 0)) < 4.0 * st.stderr_of_mean);
  }
}

TEST_CASE("second-moment identity at finite n") {
  // E|mu_n(f)|^2 equals the double integral of f f exp(beta^2 Cov_n), exactly
  // at finite n; MC within 4 sigma of the quadrature oracle.
  const double beta = 1.0 / std::sqrt(2.0);
  const int n = 128;
  const std::size_t grid = 512;
  const auto scheme = circle_fourier_scheme(n);
  const auto f = circle_one();
  const double oracle = second_moment_quadrature(scheme, beta, f);

  const std::size_t reps = 20000;
  std::vector<double> sq(reps);
  CirclePairingSampler sampler{scheme, grid, beta};
  sampler.run(777, reps, default_workers(),
              [&](std::size_t r, const std::vector<Complex>& chaos,
                  const std::vector<double>& angles) {
                sq[r] = std::norm(circle_quadrature(chaos, angles, f));
              });
  const auto st = sample_stats(sq);
  CHECK(std::abs(st.mean - oracle) < 4.0 * st.stderr_of_mean);
}

TEST_CASE("Cauchy property of paired scalars") {
  // E|mu_m(f) - mu_n(f)|^2 decreases along n,m = 64,128,256,512 and ends
  // below 5% of E|mu_64(f)|^2. Quadrature route (analytic, no MC noise):
  // E|mu_m(f)-mu_n(f)|^2 = q(m,m) + q(n,n) - 2 q(min,min) for nested
  // truncations sharing coefficients, where q(a,b) integrates exp(b^2 C_ab).
  const double beta = 1.0 / std::sqrt(2.0);
  const auto f = circle_one();
  std::vector<int> ns{64, 128, 256, 512};
  std::vector<double> m2;
  for (int n : ns) m2.push_back(second_moment_quadrature(circle_fourier_scheme(n), beta, f));
  // cross term for nested schemes = second moment at the coarser level
  std::vector<double> cauchy;
  for (std::size_t i = 0; i + 1 < ns.size(); ++i)
    cauchy.push_back(m2[i + 1] - m2[i]);  // = E|mu_{n+1}(f)-mu_n(f)|^2 >= 0
  for (std::size_t i = 0; i + 1 < cauchy.size(); ++i) CHECK(cauchy[i + 1] < cauchy[i]);
  CHECK(cauchy.back() < 0.05 * m2[0]);
}

TEST_CASE("scheme independence via coupled pairs") {
  const double beta = 1.0 / std::sqrt(2.0);
  const auto f = circle_one();
  const std::size_t grid = 2048, reps = 20000;

  SECTION("identical schemes give exactly zero") {
    const auto rep = pair_two_schemes(circle_fourier_scheme(128), circle_fourier_scheme(128),
                                      beta, f, grid, 200, 9, 9, default_workers());
    CHECK(rep.distance_sq == 0.0);
  }
  SECTION("different seeds are rejected") {
    CHECK_THROWS_AS(pair_two_schemes(circle_fourier_scheme(64), circle_fejer_scheme(64),
                                     beta, f, grid, 10, 1, 2, 1),
                    Error);
  }
  SECTION("Fourier n=512 vs Fejer n=512, shared modes") {
    const auto rep = pair_two_schemes(circle_fourier_scheme(512), circle_fejer_scheme(512),
                                      beta, f, grid, reps, 42, 42, default_workers());
    CHECK(rep.distance_sq < 0.05 * rep.reference_sq);
  }
  SECTION("Fourier n=512 vs smoothed n=1023 at eps=1/512, shared modes") {
    const auto rep = pair_two_schemes(circle_fourier_scheme(512),
                                      circle_smoothed_scheme(1023, 1.0 / 512),
                                      beta, f, grid, reps, 43, 43, default_workers());
    CHECK(rep.distance_sq < 0.05 * rep.reference_sq);
  }
}

TEST_CASE("cosine pairing") {
  const double w = circle_cell_weight(512);
  const auto f = circle_bump(kPi, 1.2);

  SECTION("beta -> 0 gives int f") {
    const auto field = sample_circle_field(32, uniform_circle_grid(512), 3);
    const auto chaos = build_chaos(field, 1e-8, true);
    double f_int = 0.0;
    for (std::size_t j = 0; j < 512; ++j) f_int += f(Vec2{kTwoPi * j / 512.0, 0.0}) * w;
    CHECK(cosine_pair(chaos, f, w) == Catch::Approx(f_int).margin(1e-5));
  }
  SECTION("E cosine_pair = int f at 4 sigma, and the variance identity") {
    const double beta = 0.7;
    const int n = 128;
    const auto scheme = circle_fourier_scheme(n);
    const std::size_t reps = 30000;
    std::vector<double> cps(reps);
    std::vector<Complex> pairs(reps);
    CirclePairingSampler sampler{scheme, 512, beta};
    sampler.run(31415, reps, default_workers(),
                [&](std::size_t r, const std::vector<Complex>& chaos,
                    const std::vector<double>& angles) {
                  const Complex p = circle_quadrature(chaos, angles, f);
                  pairs[r] = p;
                  cps[r] = p.real();
                });
    double f_int = 0.0;
    for (std::size_t j = 0; j < 512; ++j) f_int += f(Vec2{kTwoPi * j / 512.0, 0.0}) * w;
    const auto st = sample_stats(cps);
    CHECK(std::abs(st.mean - f_int) < 4.0 * st.stderr_of_mean);

    // Var(Re mu(f)) = (1/2)[E|mu(f)|^2 + Re E mu(f)^2] - (int f)^2, and the
    // square term E mu(f)^2 integrates exp(-beta^2 Cov_n) (quadrature oracle).
    const int q = 1024;
    std::vector<double> fv(q), cov(q);
    for (int j = 0; j < q; ++j) {
      fv[j] = f(Vec2{kTwoPi * j / q, 0.0});
      cov[j] = scheme.cov(kTwoPi * j / q);
    }
    double m_abs = 0.0, m_sq = 0.0;
    for (int d = 0; d < q; ++d) {
      double ff = 0.0;
      for (int j = 0; j < q; ++j) ff += fv[j] * fv[(j + d) % q];
      m_abs += ff * std::exp(beta * beta * cov[d]);
      m_sq += ff * std::exp(-beta * beta * cov[d]);
    }
    const double cell = kTwoPi / q;
    m_abs *= cell * cell;
    m_sq *= cell * cell;
    const double var_oracle = 0.5 * (m_abs + m_sq) - f_int * f_int;
    const auto stv = sample_stats(cps);
    // variance of the sample variance ~ 2 var^2 / n for near-Gaussian data;
    // use a generous 6-sigma band
    const double var_hat = stv.variance;
    CHECK(std::abs(var_hat - var_oracle) <
          6.0 * var_oracle * std::sqrt(2.0 / static_cast<double>(reps)) + 1e-3);
  }
}

TEST_CASE("universality transform") {
  const double beta = 0.6;
  const auto f = circle_one();

  SECTION("H = cos(beta x) reproduces cosine_pair") {
    const int n = 64;
    const auto scheme = circle_fourier_scheme(n);
    Rng rng(8, 0);
    const auto modes = draw_circle_modes(n, rng);
    std::vector<double> vals;
    std::vector<Complex> scratch;
    eval_circle_field_uniform(scheme, modes, 512, vals, scratch);
    PeriodicEvenSeries h;
    h.beta = beta;
    h.cos_coeffs = {1.0};
    const double u = universality_pair_value(h, vals, scheme.variance(), f,
                                             uniform_circle_grid(512));
    // cosine pair of the same realization
    const double comp = std::exp(0.5 * beta * beta * scheme.variance());
    double cp = 0.0;
    for (std::size_t j = 0; j < vals.size(); ++j)
      cp += comp * std::cos(beta * vals[j]);
    cp *= circle_cell_weight(vals.size());
    CHECK(u == Catch::Approx(cp).margin(1e-10));
  }

  SECTION("validation of the series hypotheses") {
    CHECK_THROWS_AS(make_periodic_even_series(beta, {0.5, 1.0}), Error);
    CHECK_THROWS_AS(make_periodic_even_series(beta, {0.0, 1.0}, {0.3}), Error);
    CHECK_NOTHROW(make_periodic_even_series(beta, {0.0, 1.0, 0.2}));
  }

  SECTION("H = cos(2 beta x): second moment scales like c_n^{min(3b^2, 1-b^2)}") {
    // analytic quadrature of E|Y_2|^2 over a dyadic n sweep, slope vs log c_n
    std::vector<double> logc, logm;
    for (int n : {16, 32, 64, 128, 256, 512, 1024}) {
      const auto scheme = circle_fourier_scheme(n);
      logc.push_back(std::log(scheme.cutoff));
      logm.push_back(std::log(mode_k_second_moment(scheme, beta, 2, f, 2048)));
    }
    const double alpha = std::min(3.0 * beta * beta, 1.0 - beta * beta);
    const double slope = theil_sen_slope(logc, logm);
    CHECK(slope == Catch::Approx(alpha).epsilon(0.25));
  }

  SECTION("square wave: E|U_n - (4/pi) cosine_pair|^2 decreases in n") {
    const auto h = square_wave_series(beta, 25);
    CHECK(h.a_coefficient() == Catch::Approx(4.0 / kPi));
    std::vector<double> dist;
    for (int n : {16, 64, 256}) {
      const auto scheme = circle_fourier_scheme(n);
      const std::size_t reps = 4000;
      std::vector<double> d2(reps);
      const auto angles = uniform_circle_grid(1024);
      parallel_for(reps, default_workers(), [&](std::size_t r) {
        Rng rng(99, r);
        const auto modes = draw_circle_modes(n, rng);
        thread_local std::vector<double> vals;
        thread_local std::vector<Complex> scratch;
        eval_circle_field_uniform(scheme, modes, 1024, vals, scratch);
        const double u = universality_pair_value(h, vals, scheme.variance(), f, angles);
        const double comp = std::exp(0.5 * beta * beta * scheme.variance());
        double cp = 0.0;
        for (std::size_t j = 0; j < vals.size(); ++j)
          cp += comp * std::cos(beta * vals[j]);
        cp *= circle_cell_weight(vals.size());
        d2[r] = sqr(u - h.a_coefficient() * cp);
      });
      dist.push_back(sample_stats(d2).mean);
    }
    CHECK(dist[1] < dist[0]);
    CHECK(dist[2] < dist[1]);
  }
}

TEST_CASE("KL martingale diagnostic on the square") {
  const double beta = 0.8;
  const auto f = bump_function({0.5, 0.5}, 0.35);
  std::vector<Vec2> grid;
  const int gm = 24;
  for (int i = 0; i < gm; ++i)
    for (int j = 0; j < gm; ++j)
      grid.push_back({(i + 0.5) / gm, (j + 0.5) / gm});
  const double cell = 1.0 / (gm * gm);

  SECTION("n=0 is the deterministic integral") {
    const auto rep = kl_martingale_diagnostic(f, beta, {0}, grid, cell, 50, 4, 1);
    CHECK(std::abs(rep.mean[0] - rep.integral_f) < 1e-12);
    CHECK(rep.second_moment[0] == Catch::Approx(std::norm(rep.integral_f)).epsilon(1e-10));
  }
  SECTION("mean constancy and monotone bounded second moment over {16,64,256}") {
    const auto rep = kl_martingale_diagnostic(f, beta, {16, 64, 256}, grid, cell, 6000,
                                              2024, default_workers());
    CHECK(rep.mean_constant);
    CHECK(rep.second_moment_monotone);
    CHECK(rep.second_moment_bounded);
    CHECK(rep.second_moment.back() <= rep.l2_bound);
  }
}

TEST_CASE("sine-Gordon reweighting") {
  // small disc grid around the origin
  std::vector<Vec2> grid;
  const double h = 0.05;
  for (int i = -12; i <= 12; ++i)
    for (int j = -12; j <= 12; ++j) {
      const Vec2 p{i * h, j * h};
      if (p[0] * p[0] + p[1] * p[1] < 0.64) grid.push_back(p);
    }
  const MollifiedGaussianSampler sampler(LogCorrelatedModel::unit_disc(), grid, 0.08);
  const double beta = 1.0 / std::sqrt(2.0);
  const auto f = bump_function({0, 0}, 0.5);
  const ChaosObservable fobs = [f](const ChaosField& c, double cell) {
    return std::clamp(cosine_pair(c, f, cell), -1.0, 1.0);
  };

  SECTION("psi == 0 reduces to the plain GFF expectation; F == 1 normalises") {
    SineGordonSpec spec{bump_function({0, 0}, 0.5, 0.0), beta};
    const auto one = sine_gordon_expect(
        sampler, spec, [](const ChaosField&, double) { return 1.0; }, h * h, 400, 11, 1);
    CHECK(one.estimate == Catch::Approx(1.0).margin(1e-12));
    CHECK(one.ess == Catch::Approx(400.0).margin(1e-9));
  }

  SECTION("positive psi shifts the clamped cosine pairing upward") {
    const std::size_t reps = 4000;
    SineGordonSpec spec0{bump_function({0, 0}, 0.5, 0.0), beta};
    SineGordonSpec spec1{bump_function({0, 0}, 0.5, 0.5), beta};
    const auto base = sine_gordon_expect(sampler, spec0, fobs, h * h, reps, 17,
                                         default_workers());
    const auto tilt = sine_gordon_expect(sampler, spec1, fobs, h * h, reps, 17,
                                         default_workers());
    // first-order oracle: shift ~ Cov(F, <cos beta X, psi>) > 0, estimated
    // independently from the same replica stream at psi = 0
    std::vector<double> fs(reps), qs(reps);
    const auto psi = bump_function({0, 0}, 0.5, 0.5);
    parallel_for(reps, default_workers(), [&](std::size_t r) {
      Rng rng(17, r);
      std::vector<double> x;
      sampler.draw(rng, x);
      ChaosField chaos;
      chaos.domain = Domain::UnitDisc;
      chaos.dimension = 2;
      chaos.beta = beta;
      chaos.grid = sampler.grid();
      chaos.variance_profile = sampler.variance_profile();
      chaos.values.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        chaos.values[i] =
            std::polar(std::exp(0.5 * beta * beta * chaos.variance_profile[i]),
                       beta * x[i]);
      fs[r] = fobs(chaos, h * h);
      qs[r] = cosine_pair(chaos, psi, h * h);
    });
    double cov = 0.0;
    const double fmean = sample_stats(fs).mean, qmean = sample_stats(qs).mean;
    for (std::size_t r = 0; r < reps; ++r) cov += (fs[r] - fmean) * (qs[r] - qmean);
    cov /= static_cast<double>(reps - 1);
    CHECK(cov > 0.0);
    CHECK(tilt.estimate > base.estimate - 2.0 * (base.stderr_ + tilt.stderr_));
  }

  SECTION("ESS decreases as the tilt grows") {
    std::vector<double> esses;
    for (double scale : {0.0, 1.0, 2.5}) {
      SineGordonSpec spec{bump_function({0, 0}, 0.5, scale), beta};
      esses.push_back(sine_gordon_expect(sampler, spec,
                                         [](const ChaosField&, double) { return 1.0; },
                                         h * h, 2000, 23, default_workers())
                          .ess);
    }
    CHECK(esses[1] < esses[0]);
    CHECK(esses[2] < esses[1]);
  }

  SECTION("beta outside (0, sqrt 2) rejected") {
    SineGordonSpec bad{bump_function({0, 0}, 0.5, 0.1), 1.6};
    CHECK_THROWS_AS(sine_gordon_expect(sampler, bad,
                                       [](const ChaosField&, double) { return 1.0; },
                                       h * h, 100, 3, 1),
                    Error);
  }
}
