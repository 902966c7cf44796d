#include <doctest.h>

#include <cmath>

#include "kinstab/empirical.hpp"
#include "kinstab/numerics.hpp"

using namespace kinstab;

TEST_CASE("quadrature and root finding against closed forms") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate_to_inf([](double x) { return std::exp(-x); }, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(integrate_to_inf([](double x) { return 1.0 / (x * x); }, 1.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("compensated sum keeps small terms") {
  std::vector<double> xs = {1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(xs) == 2.0);
}

TEST_CASE("Aitken extrapolation of a geometric error") {
  std::vector<double> v;
  for (int i = 0; i < 8; ++i) v.push_back(3.0 + 0.7 * std::pow(0.5, i));
  CHECK(aitken_limit(v).value == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_q(1.0) == doctest::Approx(0.2699996).epsilon(1e-5));
  CHECK(kolmogorov_q(3.0) < 1e-6);
}

TEST_CASE("empirical distances") {
  EmpiricalMeasure a({0.0, 1.0, 2.0, 3.0}), b({0.5, 1.5, 2.5, 3.5});
  CHECK(ks_distance(a, b) == doctest::Approx(0.25));
  CHECK(wasserstein1(a, b) == doctest::Approx(0.5));
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(a.cdf(1.0) == doctest::Approx(0.5));
  // atoms shared by both measures do not inflate the distance
  EmpiricalMeasure c({0.0, 0.0, 1.0}), d({0.0, 0.0, 1.0});
  CHECK(ks_distance(c, d) == 0.0);
}
