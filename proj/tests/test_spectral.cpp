#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "imchaos/field.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/spectral.hpp"
#include "imchaos/util.hpp"

using namespace imchaos;

TEST_CASE("sobolev norm basics") {
  SECTION("constant function: |fhat(0)|^2 = (2 pi)^2 for any s") {
    std::vector<double> ones(64, 1.0);
    for (double s : {-0.5, 0.0, 1.5})
      CHECK(sobolev_norm_sq(ones, s) == Catch::Approx(4.0 * kPi * kPi).epsilon(1e-10));
  }
  SECTION("single mode cos(3 theta)") {
    const std::size_t m = 128;
    std::vector<double> f(m);
    for (std::size_t j = 0; j < m; ++j) f[j] = std::cos(3.0 * (kTwoPi * j / m));
    // fhat(+-3) = pi, so norm^2 = 2 (1+9)^s pi^2
    const double s = -0.7;
    CHECK(sobolev_norm_sq(f, s) ==
          Catch::Approx(2.0 * std::pow(10.0, s) * kPi * kPi).epsilon(1e-9));
  }
  SECTION("non power-of-two grid rejected") {
    std::vector<double> f(100, 0.0);
    CHECK_THROWS_AS(sobolev_norm_sq(f, 0.0), Error);
  }
}

TEST_CASE("circle field Sobolev diagnostics") {
  const std::size_t m = 4096;
  const int workers = default_workers();

  SECTION("E ||X_n||^2 in H^{-1/4} stays bounded in n (MC, 1000 replicas)") {
    std::vector<double> means;
    for (int n : {64, 256, 1024}) {
      const auto scheme = circle_fourier_scheme(n);
      const std::size_t reps = 1000;
      std::vector<double> norms(reps);
      parallel_for(reps, workers, [&](std::size_t i) {
        Rng rng(1001, i);
        const auto modes = draw_circle_modes(scheme.n_modes, rng);
        std::vector<double> vals;
        std::vector<Complex> scratch;
        eval_circle_field_uniform(scheme, modes, m, vals, scratch);
        norms[i] = sobolev_norm_sq(vals, -0.25);
      });
      means.push_back(sample_stats(norms).mean);
    }
    CHECK(means[2] < 1.4 * means[1] + 1.0);
  }

  SECTION("s=0 diverges like H_n times the grid mass") {
    for (int n : {32, 128}) {
      const auto scheme = circle_fourier_scheme(n);
      const std::size_t reps = 4000;
      std::vector<double> norms(reps);
      parallel_for(reps, workers, [&](std::size_t i) {
        Rng rng(77, i);
        const auto modes = draw_circle_modes(n, rng);
        std::vector<double> vals;
        std::vector<Complex> scratch;
        eval_circle_field_uniform(scheme, modes, m, vals, scratch);
        norms[i] = sobolev_norm_sq(vals, 0.0);
      });
      const auto st = sample_stats(norms);
      const double oracle = 4.0 * kPi * kPi * harmonic_number(n);
      CHECK(std::abs(st.mean - oracle) < 4.0 * st.stderr_of_mean);
    }
  }
}

TEST_CASE("besov block norms") {
  const std::size_t m = 256;

  SECTION("pure mode e^{i 5 theta} lands in block j=2 only") {
    std::vector<Complex> f(m);
    for (std::size_t j = 0; j < m; ++j)
      f[j] = std::exp(Complex(0, 5.0 * (kTwoPi * j / m)));
    const auto blocks = besov_block_norms(f, 2.0);
    for (const auto& b : blocks) {
      if (b.j == 2)
        CHECK(b.norm > 1.0);
      else
        CHECK(b.norm < 1e-9);
    }
  }

  SECTION("smooth cos theta: blocks j>=1 vanish") {
    std::vector<double> f(m);
    for (std::size_t j = 0; j < m; ++j) f[j] = std::cos(kTwoPi * j / m);
    const auto blocks = besov_block_norms(f, std::numeric_limits<double>::infinity());
    for (const auto& b : blocks)
      if (b.j >= 1) CHECK(b.norm < 1e-10);
  }

  SECTION("white noise: L2 block norms grow like 2^{j/2}") {
    const std::size_t reps = 400;
    const int jmax = 6;
    std::vector<std::vector<double>> lognorm(jmax + 1);
    for (std::size_t r = 0; r < reps; ++r) {
      Rng rng(9, r);
      std::vector<double> w(m);
      for (auto& v : w) v = rng.normal();
      const auto blocks = besov_block_norms(w, 2.0);
      for (const auto& b : blocks)
        if (b.j <= jmax && b.norm > 0) lognorm[b.j].push_back(std::log2(b.norm));
    }
    std::vector<double> xs, ys;
    for (int j = 1; j <= jmax; ++j) {
      xs.push_back(j);
      ys.push_back(median(lognorm[j]));
    }
    const double slope = theil_sen_slope(xs, ys);
    CHECK(slope == Catch::Approx(0.5).margin(0.1));
  }
}
