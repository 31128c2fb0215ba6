#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "imchaos/ising.hpp"
#include "imchaos/ising_estimators.hpp"
#include "imchaos/parallel.hpp"
#include "imchaos/util.hpp"

using namespace imchaos;

TEST_CASE("lattice geometry") {
  SECTION("delta = 1/2 gives the four central faces") {
    const auto g = make_disc_lattice(0.5);
    CHECK(g.interior.size() == 4);
    for (int c : g.interior) {
      const Vec2 p = g.center(c);
      CHECK(std::abs(p[0]) == Catch::Approx(0.25));
      CHECK(std::abs(p[1]) == Catch::Approx(0.25));
    }
  }
  SECTION("every interior face has 4 neighbours in F or boundary") {
    const auto g = make_disc_lattice(1.0 / 16);
    const int off[4] = {1, -1, g.ny, -g.ny};
    for (int c : g.interior)
      for (int k = 0; k < 4; ++k) CHECK(g.role[c + off[k]] != 0);
  }
  SECTION("face count grows like pi / delta^2") {
    const auto g = make_disc_lattice(1.0 / 32);
    const double expected = kPi * 32 * 32;
    CHECK(std::abs(static_cast<double>(g.interior.size()) - expected) <
          0.15 * expected);
  }
}

TEST_CASE("wolff step basics") {
  const auto g = make_disc_lattice(0.25);
  SECTION("beta = 0: cluster size 1 always") {
    WolffSampler w(g, 0.0);
    SpinLattice s(g);
    Rng rng(1, 0);
    for (int t = 0; t < 200; ++t) CHECK(w.step(s, rng).size == 1);
  }
  SECTION("seed determinism gives identical streams") {
    auto run = [&] {
      WolffSampler w(g, kIsingBetaCritical);
      SpinLattice s(g);
      Rng rng(7, 3);
      std::vector<int> sizes;
      for (int t = 0; t < 500; ++t)
        sizes.push_back(static_cast<int>(w.step(s, rng).size));
      return std::make_pair(sizes, s.spin);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}

TEST_CASE("Gibbs gate: exact enumeration on the 2x2 system") {
  const auto g = make_disc_lattice(0.5);
  REQUIRE(g.interior.size() == 4);
  const auto exact = exact_gibbs_distribution(g, kIsingBetaCritical);
  REQUIRE(exact.size() == 16);

  // empirical distribution over 10^7 wolff steps, subsampled every 8 steps,
  // with batch-mean errors to absorb autocorrelation
  WolffSampler w(g, kIsingBetaCritical);
  SpinLattice s(g);
  Rng rng(42, 0);
  const std::size_t steps = 10000000;
  const int subsample = 8;
  const std::size_t n_obs = steps / subsample;
  const int n_batches = 50;
  std::vector<std::array<double, 16>> batch_freq(
      n_batches, std::array<double, 16>{});
  std::size_t obs = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    w.step(s, rng);
    if (t % subsample != 0) continue;
    std::uint32_t state = 0;
    for (int i = 0; i < 4; ++i)
      if (s.spin[g.interior[i]] > 0) state |= 1U << i;
    const int batch = static_cast<int>(obs * n_batches / n_obs);
    batch_freq[std::min(batch, n_batches - 1)][state] += 1.0;
    ++obs;
  }
  const double per_batch = static_cast<double>(n_obs) / n_batches;
  for (int st = 0; st < 16; ++st) {
    std::vector<double> freqs;
    for (int b = 0; b < n_batches; ++b)
      freqs.push_back(batch_freq[b][st] / per_batch);
    const auto stat = sample_stats(freqs);
    INFO("state " << st << " exact " << exact[st] << " mc " << stat.mean);
    CHECK(std::abs(stat.mean - exact[st]) <
          4.0 * std::max(stat.stderr_of_mean, 1e-6));
  }
}

TEST_CASE("plus boundary positivity and seed determinism of streams") {
  const auto g = make_disc_lattice(1.0 / 16);
  CriticalRunConfig cfg;
  cfg.delta = g.delta;
  cfg.n_samples = 3000;
  cfg.seed = 9;
  cfg.workers = default_workers();
  cfg.spacing_override = 6;
  const int probe = g.face_of({0.0, 0.0});
  const int probe2 = g.face_of({0.4, 0.2});
  std::vector<double> s0(cfg.n_samples), s1(cfg.n_samples);
  run_critical_single(cfg, g, [&](std::size_t i, const SpinLattice& a, const FaceLattice&) {
    s0[i] = a.spin[probe];
    s1[i] = a.spin[probe2];
  });
  const auto st0 = sample_stats(s0), st1 = sample_stats(s1);
  CHECK(st0.mean > 4.0 * st0.stderr_of_mean);
  CHECK(st1.mean > 4.0 * st1.stderr_of_mean);

  std::vector<double> s0b(cfg.n_samples);
  run_critical_single(cfg, g, [&](std::size_t i, const SpinLattice& a, const FaceLattice&) {
    s0b[i] = a.spin[probe];
  });
  CHECK(s0 == s0b);
}

TEST_CASE("chi correlation evaluator") {
  SECTION("constant recomputed from the zeta series") {
    CHECK(zeta_prime_minus_one() == Catch::Approx(-0.1654211437).margin(1e-8));
    CHECK(chi_constant() == Catch::Approx(0.8387).margin(2e-4));
  }
  SECTION("n=1 and n=2 match the closed-form code paths to 1e-10") {
    const Vec2 a{0.31, -0.12}, b{-0.4, 0.22};
    CHECK(chi_correlation({a}) == Catch::Approx(chi_correlation_n1(a)).margin(1e-10));
    CHECK(chi_correlation({a, b}) ==
          Catch::Approx(chi_correlation_n2(a, b)).margin(1e-10));
  }
  SECTION("symmetry under relabeling") {
    const Vec2 a{0.3, 0.0}, b{-0.3, 0.1}, c{0.1, -0.35};
    CHECK(chi_correlation({a, b, c}) == Catch::Approx(chi_correlation({c, a, b})));
    CHECK(chi_correlation({a, b}) == Catch::Approx(chi_correlation({b, a})));
  }
  SECTION("guards") {
    CHECK_THROWS_AS(chi_correlation({{0.999, 0.0}}), Error);
    CHECK_THROWS_AS(chi_correlation({{0.1, 0.0}, {0.105, 0.0}}), Error);
  }
}

TEST_CASE("xor two-point at coarse delta (smoke scale)") {
  const auto g = make_disc_lattice(1.0 / 32);
  const auto rep = xor_two_point(g, {0.3, 0.0}, {-0.3, 0.0}, 20000, 11,
                                 default_workers());
  INFO("ratio=" << rep.ratio << " factorization sigma=" << rep.factorization_gap_sigma);
  // generous band at delta = 1/32; the acceptance suite runs 1/128
  CHECK(rep.ratio > 0.7);
  CHECK(rep.ratio < 1.3);
  CHECK(std::abs(rep.factorization_gap_sigma) < 4.0);
}

TEST_CASE("xor pairing moment k=1 against the continuum target (smoke scale)") {
  const auto g = make_disc_lattice(1.0 / 32);
  const auto f = bump_function({0.0, 0.0}, 0.5);
  const auto rep = xor_pairing_moment(g, f, 1, 20000, 13, default_workers());
  INFO("estimate=" << rep.estimate << " oracle=" << rep.oracle);
  CHECK(rep.ratio > 0.75);
  CHECK(rep.ratio < 1.25);
  CHECK(std::isfinite(rep.exp_moment));
}

TEST_CASE("magnetic reweighting basics") {
  const auto g = make_disc_lattice(1.0 / 16);
  const auto f = bump_function({0.0, 0.0}, 0.5);
  const auto psi0 = bump_function({0.0, 0.0}, 0.5, 0.0);
  const auto clamp_obs = [](double v) { return std::clamp(v, -1.0, 1.0); };

  SECTION("psi == 0 equals the unweighted estimate") {
    const auto rep = magnetic_reweight(g, psi0, f, clamp_obs, 2000, 5,
                                       default_workers(), 4);
    FacePairing pf(g, f);
    std::vector<double> raw(2000);
    CriticalRunConfig cfg;
    cfg.delta = g.delta;
    cfg.n_samples = 2000;
    cfg.seed = 5;
    cfg.workers = default_workers();
    cfg.spacing_override = 4;
    run_critical_xor(cfg, g, [&](std::size_t i, const SpinLattice& a,
                                 const SpinLattice& b, const FaceLattice&) {
      raw[i] = clamp_obs(std::pow(g.delta, -0.25) * pf.xor_value(a, b));
    });
    CHECK(rep.estimate == Catch::Approx(sample_stats(raw).mean).margin(1e-12));
    CHECK(rep.ess == Catch::Approx(2000.0).margin(1e-6));
  }

  SECTION("positive psi shifts the estimate upward") {
    const auto psi = bump_function({0.0, 0.0}, 0.5, 0.3);
    const auto base = magnetic_reweight(g, psi0, f, clamp_obs, 6000, 5,
                                        default_workers(), 4);
    const auto tilt = magnetic_reweight(g, psi, f, clamp_obs, 6000, 5,
                                        default_workers(), 4);
    CHECK(tilt.estimate > base.estimate);
  }
}

TEST_CASE("spin onsager check (smoke scale)") {
  const auto g = make_disc_lattice(1.0 / 32);
  std::vector<std::vector<Vec2>> tuples{
      {{0.2, 0.0}, {-0.2, 0.1}},
      {{0.1, 0.3}, {-0.25, -0.2}, {0.35, -0.3}},
      {{0.5, 0.0}, {0.55, 0.05}, {-0.5, 0.0}, {0.0, 0.5}},
  };
  const auto rep = spin_onsager_check(g, tuples, 20000, 3, default_workers());
  INFO("fitted C = " << rep.fitted_c);
  CHECK(rep.fitted_c > 0.0);
  CHECK(rep.fitted_c < 5.0);
  // odd tuple with a far-isolated point: correlation small, bound slack
  const auto odd = spin_onsager_check(
      g, {{{0.1, 0.0}, {0.15, 0.05}, {-0.6, -0.4}}}, 20000, 4, default_workers());
  CHECK(odd.tuple_c[0] < rep.fitted_c + 1.0);
}

TEST_CASE("snapshot serialization round-trips by size") {
  const auto g = make_disc_lattice(1.0 / 8);
  SpinLattice s(g);
  Rng rng(3, 0);
  WolffSampler w(g, kIsingBetaCritical);
  for (int t = 0; t < 50; ++t) w.step(s, rng);
  const std::string bytes = serialize_spins(s);
  CHECK(bytes.size() > 20);
  CHECK(bytes.compare(0, 4, "IMIS") == 0);
}
