#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "imchaos/fits.hpp"
#include "imchaos/moments.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/quad.hpp"
#include "imchaos/util.hpp"

using namespace imchaos;

namespace {

// Independent 1-d reduction oracle for the circle with f == 1:
// E|mu(1)|^2 = 2 pi * int_0^{2pi} (2 sin(u/2))^{-b2} du, via tanh-sinh.
double circle_one_second_moment_tanhsinh(double beta) {
  const double b2 = beta * beta;
  const auto q = tanh_sinh_1d(
      [b2](double u) { return std::pow(2.0 * std::sin(0.5 * u), -b2); }, 0.0, kTwoPi,
      13);
  return kTwoPi * q.value;
}

// Test-only stratified MC oracle for the 2N-point ratio integrand. Written
// directly from the moment formula; shares no code with the library path.
double stratified_mc_moment(const LogCorrelatedModel& model, const TestFunction& f,
                            double beta, int N, std::size_t samples_per_stratum,
                            int strata, std::uint64_t seed, double* stderr_out) {
  const double b2 = beta * beta;
  const Vec2 c = f.center;
  const double R = f.support_radius;
  std::vector<double> stratum_means(strata);
  parallel_for(static_cast<std::size_t>(strata), default_workers(), [&](std::size_t s) {
    Rng rng(seed, s);
    double acc = 0.0;
    for (std::size_t it = 0; it < samples_per_stratum; ++it) {
      std::vector<Vec2> pts(2 * N);
      bool inside = true;
      for (auto& p : pts) {
        p = {c[0] + rng.uniform(-R, R), c[1] + rng.uniform(-R, R)};
        if (!model.inside(p)) inside = false;
      }
      if (!inside) continue;
      double fprod = 1.0;
      for (const auto& p : pts) fprod *= f(p);
      if (fprod == 0.0) continue;
      double logk = 0.0;
      bool skip = false;
      for (int i = 0; i < N && !skip; ++i)
        for (int j = i + 1; j < N && !skip; ++j) {
          const double dxx = model.dist(pts[i], pts[j]);
          const double dyy = model.dist(pts[N + i], pts[N + j]);
          if (dxx < 1e-14 || dyy < 1e-14) { skip = true; break; }
          logk += b2 * (std::log(dxx) + std::log(dyy));
          logk -= b2 * (model.g(pts[i], pts[j]) + model.g(pts[N + i], pts[N + j]));
        }
      for (int i = 0; i < N && !skip; ++i)
        for (int j = 0; j < N && !skip; ++j) {
          const double dxy = model.dist(pts[i], pts[N + j]);
          if (dxy < 1e-14) { skip = true; break; }
          logk -= b2 * std::log(dxy);
          logk += b2 * model.g(pts[i], pts[N + j]);
        }
      if (skip) continue;
      acc += fprod * std::exp(logk);
    }
    const double box_vol = std::pow(2.0 * R, 2.0 * N * 2);
    stratum_means[s] = acc / static_cast<double>(samples_per_stratum) * box_vol;
  });
  const auto st = sample_stats(stratum_means);
  if (stderr_out) *stderr_out = st.stderr_of_mean;
  return st.mean;
}

}  // namespace

TEST_CASE("exact_moment_2N on the circle") {
  const auto circle = LogCorrelatedModel::circle();
  const auto one = circle_one();

  SECTION("two independent quadratures agree to 0.1% (N=1, f==1, b=1/sqrt2)") {
    const double beta = 1.0 / std::sqrt(2.0);
    const auto adaptive = exact_moment_2N(circle, one, beta, 1);
    const double tanhsinh = circle_one_second_moment_tanhsinh(beta);
    CHECK(adaptive.converged);
    CHECK(std::abs(adaptive.value - tanhsinh) < 1e-3 * tanhsinh);
    // sanity anchor for the oracle itself: 2 pi sqrt(2) B(1/4,1/2)
    CHECK(tanhsinh == Catch::Approx(46.59995).epsilon(1e-3));
  }

  SECTION("beta -> 0 recovers (int f)^2") {
    const auto est = exact_moment_2N(circle, one, 0.05, 1);
    CHECK(est.value == Catch::Approx(sqr(kTwoPi)).epsilon(0.02));
  }

  SECTION("N=0 returns 1") {
    CHECK(exact_moment_2N(circle, one, 0.3, 0).value == 1.0);
  }
}

TEST_CASE("qmc moments") {
  const auto circle = LogCorrelatedModel::circle();
  const auto one = circle_one();
  const double beta = 0.6;

  SECTION("agrees with the exact quadrature at N in {1,2}") {
    for (int N : {1, 2}) {
      const auto exact = exact_moment_2N(circle, one, beta, N);
      const auto qmc = qmc_moment_2N(circle, one, beta, N, 40000, 7, 16,
                                     default_workers());
      INFO("N=" << N << " exact=" << exact.value << " qmc=" << qmc.value
                << " +- " << qmc.stderr_);
      CHECK(std::abs(qmc.value - exact.value) <
            3.0 * qmc.stderr_ + 0.02 * exact.value);
    }
  }

  SECTION("N=0 gives exactly 1") {
    CHECK(qmc_moment_2N(circle, one, beta, 0, 100, 1).value == 1.0);
  }

  SECTION("moment estimator conjugation symmetry") {
    const auto scheme = circle_fourier_scheme(64);
    const std::size_t reps = 2000;
    std::vector<Complex> p21(reps), p12(reps);
    CirclePairingSampler sampler{scheme, 256, beta};
    sampler.run(55, reps, default_workers(),
                [&](std::size_t r, const std::vector<Complex>& chaos,
                    const std::vector<double>& angles) {
                  const Complex z = circle_quadrature(chaos, angles, one);
                  p21[r] = z * z * std::conj(z);
                  p12[r] = z * std::conj(z) * std::conj(z);
                });
    const Complex m21 = complex_stats(p21).mean;
    const Complex m12 = complex_stats(p12).mean;
    CHECK(std::abs(m21 - std::conj(m12)) < 1e-12);
  }
}

TEST_CASE("planar moments with the disc-embedded square model") {
  const auto square = LogCorrelatedModel::unit_square();
  const auto f = bump_function({0.5, 0.5}, 0.4);
  const double beta = 0.8;

  SECTION("N=1 exact vs stratified MC oracle at 3 sigma") {
    const auto exact = exact_moment_2N(square, f, beta, 1);
    double se = 0.0;
    const double mc = stratified_mc_moment(square, f, beta, 1, 60000, 32, 99, &se);
    INFO("exact=" << exact.value << " mc=" << mc << " +- " << se);
    CHECK(exact.converged);
    CHECK(std::abs(exact.value - mc) < 3.0 * se + 0.01 * exact.value);
  }

  SECTION("N=2 lattice value vs stratified MC oracle at 3 sigma") {
    const auto exact = exact_moment_2N(square, f, beta, 2, 1 << 20);
    double se = 0.0;
    const double mc = stratified_mc_moment(square, f, beta, 2, 150000, 32, 123, &se);
    INFO("exact=" << exact.value << " mc=" << mc << " +- " << se);
    CHECK(std::abs(exact.value - mc) < 3.0 * se + 0.05 * exact.value);
  }
}

TEST_CASE("moment growth fit shape") {
  const auto circle = LogCorrelatedModel::circle();
  const auto one = circle_one();
  const double beta = 0.6;
  const auto fit = moment_growth_fit(circle, one, beta, 6, 60000, 2027,
                                     default_workers());
  INFO("slope=" << fit.slope_nlogn);
  CHECK(fit.slope_nlogn > beta * beta * 0.7);
  CHECK(fit.slope_nlogn < beta * beta * 1.3);
}

TEST_CASE("tail fit") {
  SECTION("Gaussian control returns 2 +- 0.3") {
    const std::size_t n = 1000000;
    std::vector<double> mags(n);
    Rng rng(4, 0);
    for (auto& m : mags) m = std::abs(rng.complex_normal());
    const auto rep = tail_fit_from_samples(std::move(mags));
    CHECK(rep.exponent == Catch::Approx(2.0).margin(0.3));
  }
  SECTION("insufficient tail is reported") {
    std::vector<double> mags(1000, 1.0);
    CHECK_THROWS_AS(tail_fit_from_samples(std::move(mags)), Error);
  }
}

TEST_CASE("critical limit scan on the circle (reduced sweep)") {
  const auto circle = LogCorrelatedModel::circle();
  const auto f = circle_bump(kPi, 2.0);
  const auto rep = critical_limit_scan(circle, f, {0.90, 0.97, 0.999});
  INFO("ratios: " << rep.points[0].ratio << " " << rep.points[1].ratio << " "
                  << rep.points.back().ratio);
  CHECK(rep.monotone);
  CHECK(std::abs(rep.points.back().ratio - 1.0) < 0.05);
  CHECK(rep.mixed_small);
}
