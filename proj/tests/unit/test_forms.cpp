#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kinstab/forms.hpp"
#include "kinstab/numerics.hpp"

using namespace kinstab;

namespace {

constexpr double kH = 1.0 / 256.0;

double tent(double x, double c = 0.0, double w = 1.0) { return std::max(0.0, 1.0 - std::abs(x - c) / w); }

double bump(double x, double c, double w) {
  const double s = (x - c) / w;
  return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
}

GridFunction grid(const std::function<double(double)>& f, double hw = 4.0, double h = kH) {
  return make_grid_function(f, hw, h);
}

// int |2 pi xi|^beta |u^(xi)|^2 for the unit tent, u^ = sinc^2
double tent_plancherel(double beta) {
  auto f = [beta](double xi) {
    const double s = std::sin(std::numbers::pi * xi) / (std::numbers::pi * xi);
    return std::pow(2.0 * std::numbers::pi * xi, beta) * std::pow(s, 4);
  };
  const double L = 400.0;
  double body = 0.0;
  for (int k = 0; k < static_cast<int>(L); ++k) body += integrate(f, k == 0 ? 1e-12 : k, k + 1, 1e-13);
  // sin^4 averages to 3/8 in the tail
  const double tail = std::pow(2.0 * std::numbers::pi, beta) * 0.375 / std::pow(std::numbers::pi, 4) *
                      std::pow(L, beta - 3.0) / (3.0 - beta);
  return 2.0 * (body + tail);
}

}  // namespace

TEST_CASE("energy of zero vanishes") {
  const auto z = grid([](double) { return 0.0; });
  CHECK(sobolev_energy(z, 1.5).value == 0.0);
  CHECK(interface_energy(z, 1.5, 0.7, 0.3).value == 0.0);
  CHECK(lambda_form(z, default_model(), 1e3).value == 0.0);
}

TEST_CASE("tent energy matches the Fourier side") {
  const auto u = grid([](double x) { return tent(x); });
  const double oracle = tent_plancherel(1.5);
  const auto r = sobolev_energy(u, 1.5);
  CHECK(r.value == doctest::Approx(oracle).epsilon(0.01));
  CHECK(r.error_estimate < 0.05 * r.value);
  CHECK(sobolev_energy_exact(u, 1.5) == doctest::Approx(oracle).epsilon(1e-4));
  // near beta = 2 the band correction carries the weight
  CHECK(sobolev_energy(u, 1.8).value == doctest::Approx(tent_plancherel(1.8)).epsilon(0.01));
}

TEST_CASE("dilation scales the energy by s^(1-beta)") {
  const double beta = 1.4, s = 2.0;
  const auto u = grid([](double x) { return bump(x, 0.3, 1.0); });
  const auto us = grid([&](double x) { return bump(x / s, 0.3, 1.0); }, 6.0);
  CHECK(sobolev_energy(us, beta).value ==
        doctest::Approx(std::pow(s, 1.0 - beta) * sobolev_energy(u, beta).value).epsilon(0.005));
}

TEST_CASE("interface form reduces to the free energy") {
  const double a = 1.5;
  const auto u = grid([](double x) { return bump(x, 0.5, 1.5); });
  const double E = sobolev_energy(u, a).value;
  CHECK(interface_energy(u, a, 1.0, 0.0).value == doctest::Approx(E).epsilon(0.003));
  const auto even = grid([](double x) { return bump(x, 0.0, 1.2) * x * x; });
  CHECK(interface_energy(even, a, 0.7, 0.3).value == doctest::Approx(sobolev_energy(even, a).value).epsilon(0.003));
  CHECK(interface_energy(even, a, 0.2, 0.8).value == doctest::Approx(sobolev_energy(even, a).value).epsilon(0.003));
}

TEST_CASE("interface form: bilinearity, Cauchy-Schwarz, comparability") {
  const double a = 1.5, pp = 0.7, pm = 0.3;
  const auto u = grid([](double x) { return bump(x, 1.0, 1.0) - 0.5 * bump(x, -1.2, 0.8); });
  const auto v = grid([](double x) { return x * std::exp(-x * x); });
  std::vector<double> s(u.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = u[i] + v[i];
  const GridFunction w(u.origin(), u.spacing(), s);

  const double Eu = interface_energy(u, a, pp, pm).value;
  const double Ev = interface_energy(v, a, pp, pm).value;
  const double Ew = interface_energy(w, a, pp, pm).value;
  const double Euv = interface_form(u, v, a, pp, pm).value;
  CHECK(Ew == doctest::Approx(Eu + 2.0 * Euv + Ev).epsilon(1e-6));
  CHECK(interface_form(v, u, a, pp, pm).value == doctest::Approx(Euv).epsilon(1e-9));
  CHECK(Euv * Euv <= Eu * Ev);

  for (const GridFunction* f : {&u, &v}) {
    const double E = sobolev_energy(*f, a).value;
    const double Eh = interface_energy(*f, a, pp, pm).value;
    CHECK(Eh >= std::min(pp, 0.5) * E * (1.0 - 0.01));
    CHECK(Eh <= (1.0 + pm) * E * (1.0 + 0.01));
  }
}

TEST_CASE("exact hat energy agrees with the quadrature engine") {
  const auto u = grid([](double x) { return x * std::exp(-x * x); });
  for (double b : {1.2, 1.5, 1.8})
    CHECK(sobolev_energy(u, b).value == doctest::Approx(sobolev_energy_exact(u, b)).epsilon(0.005));
}

TEST_CASE("Hardy ratio: finite, refinement stable, uniform in beta") {
  auto f = [](double x) { return tent(x, 0.75, 0.75) - tent(x, -0.75, 0.75); };
  double worst = 0.0;
  for (double b : {1.2, 1.4, 1.6, 1.8}) {
    const auto r1 = hardy_ratio(grid(f, 3.0, 1.0 / 128), b);
    const auto r2 = hardy_ratio(grid(f, 3.0, 1.0 / 256), b);
    CHECK(std::isfinite(r1.ratio));
    CHECK(r2.ratio == doctest::Approx(r1.ratio).epsilon(0.01));
    worst = std::max(worst, r2.ratio);
  }
  CHECK(worst < 10.0);
}

TEST_CASE("Hardy ratio rejects u(0) != 0") {
  const auto u = grid([](double x) { return std::exp(-x * x); }, 3.0, 1.0 / 128);
  try {
    hardy_ratio(u, 1.5);
    FAIL("expected DivergentNumerator");
  } catch (const NumericError& e) {
    CHECK(e.kind() == "DivergentNumerator");
  }
}

TEST_CASE("norm embedding H^(alpha/2) into H^(beta/2)") {
  const std::vector<std::function<double(double)>> bank = {
      [](double x) { return tent(x, 0.5, 0.5); }, [](double x) { return x * std::exp(-x * x); },
      [](double x) { return bump(x, -1.0, 0.3); }};
  for (const auto& f : bank) {
    const auto u = grid(f, 3.0, 1.0 / 128);
    for (double b : {1.1, 1.3}) CHECK(sobolev_norm2(u, b) <= (1.0 + 8.0 / b) * sobolev_norm2(u, 1.5));
  }
}

TEST_CASE("s_m sequence examples") {
  for (double s : s_sequence(0.5, 30)) CHECK(s == 0.5);
  const auto s7 = s_sequence(0.7, 5);
  CHECK(s7[0] == doctest::Approx(0.7));
  CHECK(s7[1] == doctest::Approx(0.58));
  CHECK(s7[2] == doctest::Approx(0.532));
  for (std::size_t i = 1; i < s7.size(); ++i) CHECK(s7[i] < s7[i - 1]);
  const auto s3 = s_sequence(0.3, 40);
  for (std::size_t i = 2; i < s3.size(); ++i) {
    if (i % 2 == 0) CHECK(s3[i] > s3[i - 2]);  // s_1, s_3, ... increase
    else CHECK(s3[i] < s3[i - 2]);
  }
  CHECK(std::abs(s3.back() - 0.5) < 1e-6);
}

TEST_CASE("s_m recurrence equals enumeration exactly") {
  for (int num = 1; num <= 9; ++num) {
    const auto a = s_sequence_exact(num, 10, 14);
    const auto b = s_sequence_enumerated(num, 10, 14);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("killing lower bound has a positive constant") {
  std::vector<double> ys;
  for (double y = 1e-4; y < 50.0; y *= 1.2) ys.push_back(y);
  CHECK(killing_bound_constant(default_model(), 1e4, ys) > 0.0);
}

TEST_CASE("gamma harness on the zero family") {
  const auto z = grid([](double) { return 0.0; }, 2.0, 1.0 / 64);
  const auto rep = gamma_harness(default_model(), {z}, {1e2, 1e3}, 3);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& r : rep.rows) {
    CHECK(r.E_lambda == 0.0);
    CHECK(r.E_limit == 0.0);
  }
  CHECK(rep.equiv_lower == doctest::Approx(0.5));
  CHECK(rep.equiv_upper == doctest::Approx(1.3));
}
