#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kinstab/levy_limit.hpp"

using namespace kinstab;

TEST_CASE("stable increments have the stable characteristic function") {
  const double alpha = 1.5, C = 0.8, dt = 0.3;
  const double psi_unit = 2.0 * C * (-std::tgamma(-alpha) * std::cos(std::numbers::pi * alpha / 2.0));
  const int n = 200000;
  for (double xi : {0.5, 1.0, 2.0}) {
    Rng r = sample_rng(4, Stream::kTest, static_cast<std::uint64_t>(xi * 10));
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::cos(xi * sample_stable_increment(r, alpha, C, dt));
    const double expected = std::exp(-dt * psi_unit * std::pow(xi, alpha));
    CHECK(std::abs(s / n - expected) < 4.0 / std::sqrt(2.0 * n));
  }
}

TEST_CASE("Levy symbol: small and large frequency regimes") {
  const Model& m = default_model();
  const auto& c = m.constants();
  // lambda -> inf at fixed xi: (r_bar_* / c_alpha) |2 pi xi|^alpha
  const double lim = c.r_bar_star / c.c_alpha * std::pow(2.0 * std::numbers::pi, c.alpha);
  CHECK(levy_symbol(m, 1e9, 1.0) == doctest::Approx(lim).epsilon(0.02));
  // xi far above lambda^(1/alpha): the total jump rate lambda
  CHECK(levy_symbol(m, 100.0, 1e5) == doctest::Approx(100.0).epsilon(0.01));
  CHECK(levy_symbol(m, 100.0, 0.0) == 0.0);
}

TEST_CASE("theta_* profile against direct quadrature") {
  const double a = 1.5, z = 2.0;
  // sum over half periods [n/2, (n+1)/2] plus the mean-value tail
  double direct = 0.0;
  const int N = 4000;
  for (int n = 4; n < N; ++n)
    direct += integrate([&](double y) { return std::pow(std::sin(std::numbers::pi * y), 2) / std::pow(y, 1 + a); },
                        0.5 * n, 0.5 * (n + 1), 1e-12);
  direct += 0.5 * std::pow(0.5 * N, -a) / a;
  CHECK(theta_star_profile(a, z) == doctest::Approx(std::pow(z, a) * direct).epsilon(1e-4));
  const auto th = theta_star(a);
  CHECK(th.value > 0.0);
  CHECK(th.value <= theta_star_profile(a, 1.0) + 1e-12);
  CHECK(th.value <= theta_star_profile(a, 5.3) + 1e-12);
  CHECK(th.refinement_change < 1e-6);
}

TEST_CASE("D-modulus sees close double jumps only") {
  CHECK(d_modulus({0.0}, {1.0}, 0.1, 1.0) == 0.0);
  CHECK(d_modulus({0.0, 0.5}, {0.0, 2.0}, 0.1, 1.0) == 0.0);
  CHECK(d_modulus({0.0, 0.5, 0.52}, {0.0, 2.0, 0.0}, 0.1, 1.0) == doctest::Approx(2.0));
  CHECK(d_modulus({0.0, 0.3, 0.7}, {0.0, 2.0, 0.0}, 0.1, 1.0) == 0.0);
}

TEST_CASE("coupled proxy is dominated by the free process") {
  const Model& m = default_model();
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng r = sample_rng(6, Stream::kTest, i);
    const auto p = sample_hat_Z_path(r, m, 1e3, 1.0, 0.4);
    for (std::size_t j = 0; j < p.times.size(); ++j) CHECK(std::abs(p.coupled[j]) <= std::abs(p.free[j]) + 1e-15);
    if (p.killed_at >= 0.0) CHECK(p.coupled.back() == 0.0);
  }
}

TEST_CASE("hybrid and exact proxy samplers agree in law") {
  const Model& m = default_model();
  const std::size_t n = 10000;
  const auto a = to_measure(sample_batch(hat_z_sampler(m, 2e4, HatZMethod::kExact), 1.0, 1.0, n, 1, Stream::kHatZ));
  const auto b = to_measure(sample_batch(hat_z_sampler(m, 2e4, HatZMethod::kHybrid), 1.0, 1.0, n, 2, Stream::kHatZ));
  CHECK(ks_test_pvalue(a, b) > 1e-3);
}

TEST_CASE("zeta sampler guards its step resolution and kills near 0") {
  StablePathConfig cfg;
  cfg.step_fraction = 0.05;
  Rng r = sample_rng(1, Stream::kTest, 0);
  CHECK_THROWS_AS(sample_zeta_o(r, cfg, 1.0, 1.0), NumericError);

  StablePathConfig full;  // p_plus = 1: killing only through the tolerance
  full.h = 1e-3;
  const auto path = sample_zeta_o_path(r, full, {0.0, 0.1, 0.2}, 5e-4);
  for (double v : path) CHECK(std::isnan(v));
  const auto d = sample_zeta_o(r, full, 0.0, 2.0);
  CHECK(d.position == 2.0);
}

TEST_CASE("limit configuration follows the model") {
  const Model& m = default_model();
  const auto cfg = limit_config(m);
  CHECK(cfg.alpha == doctest::Approx(1.5));
  CHECK(cfg.scale == doctest::Approx(m.constants().r_bar_star));
  CHECK(cfg.p_plus == doctest::Approx(0.7));
  CHECK(cfg.p_minus == doctest::Approx(0.3));
}

TEST_CASE("killed mass is an atom at 0") {
  std::vector<LevyDraw> d = {{0.0, true, 1}, {1.0, false, 2}, {-1.0, false, 2}, {0.0, true, 3}};
  const auto e = to_measure(d);
  CHECK(e.cdf(0.0) - e.cdf(-1e-12) == doctest::Approx(0.5));
}

TEST_CASE("proxy semigroup is symmetric at moderate lambda") {
  const Model& m = default_model();
  auto u = GridFunction::sample([](double y) { return std::max(0.0, 1 - std::abs(y - 1.0) / 0.5); }, -3, 3, 1.0 / 64);
  auto v = GridFunction::sample([](double y) { return std::max(0.0, 1 - std::abs(y + 0.8) / 0.5); }, -3, 3, 1.0 / 64);
  const auto d = symmetry_defect(hat_z_sampler(m, 1e3), u, v, 0.5, 40000, 12);
  CHECK(std::abs(d.defect) < 4.0 * d.stderr_);
  CHECK(d.uv > 0.0);
}

TEST_CASE("extrapolated KS of identical measures vanishes") {
  EmpiricalMeasure a({0.1, 0.4, 0.9});
  CHECK(extrapolated_ks(a, a, 100.0, 1.5, a) == 0.0);
}

TEST_CASE("proxy jump kernel conserves the total rate") {
  const Model& m = default_model();
  for (double y : {0.7, -0.3, 2.0}) {
    auto r = [&](double yp) { return hat_r_lambda(m, 1.0, y, yp); };
    const double s = y > 0 ? 1.0 : -1.0;
    const double a = std::abs(y);
    double mass = integrate([&](double v) { return r(s * v); }, 0.0, a, 1e-6) +
                  integrate_to_inf([&](double v) { return r(s * v); }, a, 1e-6) +
                  integrate_to_inf([&](double v) { return r(-s * v); }, 0.0, 1e-6);
    CHECK(mass + m.kill_rate(1.0, y) == doctest::Approx(1.0).epsilon(5e-3));
  }
}

TEST_CASE("thinning envelope holds on sampled proposals") {
  const auto t = make_jump_table(default_model(), 1e4, 1'000'000, 3);
  CHECK(t.max_acceptance <= 1.0 + 1e-9);
  CHECK(t.envelope_rate == 1e4);
  CHECK(t.kill_rate.size() == t.y.size());
  for (std::size_t i = 1; i < t.y.size(); ++i) CHECK(t.kill_rate[i] <= t.kill_rate[i - 1] * (1 + 1e-9));
}

TEST_CASE("D-modulus of the interface path is at most twice the free one") {
  const Model& m = default_model();
  for (std::uint64_t i = 0; i < 40; ++i) {
    Rng r = sample_rng(8, Stream::kTest, i);
    const auto p = sample_hat_Z_path(r, m, 300.0, 1.0, 0.3);
    for (double d : {0.05, 0.2})
      CHECK(d_modulus(p.times, p.coupled, d, 1.0) <= 2.0 * d_modulus(p.times, p.free, d, 1.0) + 1e-12);
  }
}

TEST_CASE("semigroup is sub-Markov and matches the survival curve") {
  const Model& m = default_model();
  const auto s = hat_z_sampler(m, 1e3);
  const auto one = GridFunction::sample([](double) { return 1.0; }, -50, 50, 1.0 / 8);
  const std::vector<double> q = {-1.0, 0.2, 0.9};
  const auto a = semigroup_apply(s, one, 0.5, q, 4000, 2);
  const auto b = survival_curve(s, 0.5, q, 4000, 3);
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(a.mean[i] <= 1.0);
    CHECK(std::abs(a.mean[i] - b.mean[i]) < 4.0 * std::hypot(a.stderr_[i], b.stderr_[i]) + 0.01);
  }
  const auto t0 = survival_curve(s, 0.0, q, 100, 1);
  for (double v : t0.mean) CHECK(v == 1.0);
}
