#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kinstab/model.hpp"
#include "kinstab/numerics.hpp"

using namespace kinstab;

namespace {

bool has_issue(const ValidationReport& r, const std::string& kind) {
  for (const auto& i : r.issues)
    if (i.kind == kind) return true;
  return false;
}

ValidationReport invalid(const FamilySpec& s) {
  auto v = validate_params(make_params(s));
  REQUIRE(std::holds_alternative<ValidationReport>(v));
  return std::get<ValidationReport>(v);
}

}  // namespace

TEST_CASE("c_alpha matches the Fourier normalization") {
  // int (1 - cos y) y^(-1-a) dy over (0, inf) = -Gamma(-a) cos(pi a / 2)
  for (double a : {1.2, 1.5, 1.8}) {
    const double I = -std::tgamma(-a) * std::cos(std::numbers::pi * a / 2.0);
    CHECK(c_alpha(a) == doctest::Approx(1.0 / (2.0 * I)).epsilon(1e-12));
    CHECK(c_alpha(a) > 0.0);
  }
  CHECK(q_alpha(1.5, -2.0) == doctest::Approx(c_alpha(1.5) / std::pow(2.0, 2.5)));
}

TEST_CASE("default model validates with alpha = 3/2") {
  const Model& m = default_model();
  const auto& c = m.constants();
  CHECK(c.alpha == doctest::Approx(1.5));
  CHECK(c.theta_bar == doctest::Approx(m.params().gamma / c.R_cal));
  CHECK(c.r_bar_star > 0.0);
  CHECK(c.p_plus0 == doctest::Approx(0.7));
  CHECK(c.p_minus0 == doctest::Approx(0.3));
}

TEST_CASE("interface probabilities form a distribution") {
  const Model& m = default_model();
  for (double k = -0.5; k <= 0.5; k += 0.01) {
    const double s = m.p_plus(k) + m.p_minus(k) + m.p_zero(k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.p_zero(k) >= 0.0);
    CHECK(m.p_zero(k) <= 1.0);
    CHECK(m.p_plus(k) == doctest::Approx(m.p_plus(-k)));
  }
}

TEST_CASE("S inverse round trip and monotonicity") {
  const Model& m = default_model();
  double prev = m.S(1e-3);
  for (double k = 2e-3; k < 0.5; k += 0.0137) {
    const double s = m.S(k);
    CHECK(s < prev);
    prev = s;
    if (s > 0.0) CHECK(m.S_inverse(s) == doctest::Approx(k).epsilon(1e-9));
  }
}

TEST_CASE("density of S(K) is even, normalized and has the right tail") {
  const Model& m = default_model();
  const auto& c = m.constants();
  CHECK(m.s_density(0.7) == doctest::Approx(m.s_density(-0.7)));
  // P(|S(K)| > w) from the density against the frequency measure of {k : S(k) > w}
  const double w = 3.0;
  const double tail = 2.0 * integrate_to_inf([&](double y) { return m.s_density(y); }, w, 1e-9);
  const double k_w = m.S_inverse(w);
  const double direct = 2.0 * integrate([&](double k) { return m.params().R2(k); }, 0.0, k_w, 1e-11);
  CHECK(tail == doctest::Approx(direct).epsilon(1e-5));
  const double y = 1e3;
  CHECK(m.s_density(y) * std::pow(y, 1.0 + c.alpha) == doctest::Approx(c.r_star).epsilon(0.01));
  CHECK(m.bar_r(y) * std::pow(y, 1.0 + c.alpha) == doctest::Approx(c.r_bar_star).epsilon(0.01));
}

TEST_CASE("table lookups agree with quadrature") {
  const Model& m = default_model();
  for (double w : {0.1, 1.0, 10.0, 100.0}) {
    CHECK(m.fast_survival(w) == doctest::Approx(m.x_survival(w)).epsilon(2e-3));
    CHECK(m.fast_bar_r(w) == doctest::Approx(m.bar_r(w)).epsilon(2e-3));
  }
  CHECK(m.bar_r_lambda(100.0, 0.3) ==
        doctest::Approx(100.0 * std::pow(100.0, 1.0 / 1.5) * m.bar_r(std::pow(100.0, 1.0 / 1.5) * 0.3)));
}

TEST_CASE("validation names the broken hypothesis") {
  FamilySpec s;
  s.beta3 = 0.5;  // alpha = 6
  CHECK(has_issue(invalid(s), "AlphaOutOfRange"));

  FamilySpec g;
  g.gamma = -1.0;
  CHECK(has_issue(invalid(g), "RangeError"));

  FamilySpec p;
  p.p_zero = "constant";
  p.p_c = 1.0;  // everything absorbed, nothing transmitted
  CHECK(has_issue(invalid(p), "ProbabilityDefect"));

  FamilySpec q;
  q.p_c = 5.0;  // p0 > 1 somewhere
  CHECK(has_issue(invalid(q), "ProbabilityDefect"));
}

TEST_CASE("frequency sampler reproduces the R2 law") {
  const Model& m = default_model();
  Rng r = sample_rng(3, Stream::kTest, 0);
  const int n = 200000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += std::abs(m.sample_frequency(r).k) < 0.25;
  const double p = 2.0 * integrate([&](double k) { return m.params().R2(k); }, 0.0, 0.25, 1e-11);
  CHECK(static_cast<double>(below) / n == doctest::Approx(p).epsilon(0.02));
}
