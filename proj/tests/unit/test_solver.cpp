#include <doctest.h>

#include <cmath>

#include "kinstab/solver.hpp"

using namespace kinstab;

namespace {

const std::vector<double> kT = {0.0, 0.1, 0.25};

WeakSolutionField synthetic(double T_o, const std::function<double(double, double)>& w) {
  WeakSolutionField f;
  f.t = {0.0, 0.2, 0.4, 0.6};
  f.x0 = -4.0;
  f.hx = 1.0 / 16.0;
  f.nx = 129;
  f.T_o = T_o;
  f.mean.assign(f.t.size(), std::vector<double>(f.nx));
  f.stderr_ = f.mean;
  for (std::size_t ti = 0; ti < f.t.size(); ++ti)
    for (std::size_t i = 0; i < f.nx; ++i) f.mean[ti][i] = w(f.t[ti], f.x(i));
  return f;
}

TestFunction bump_fn(double c, double w) {
  auto g = [c, w](double y) {
    const double s = (y - c) / w;
    return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
  };
  return {[g](double s, double y) { return std::exp(-s) * g(y); },
          [g](double s, double y) { return -std::exp(-s) * g(y); }};
}

}  // namespace

TEST_CASE("constant data stays constant") {
  const Model& m = default_model();
  const auto f = solve_limit_mc(m, [](double) { return 0.0; }, kT, -1.0, 0.25, 9, 50, 1);
  for (const auto& row : f.mean)
    for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("solver: initial row, interface node, symmetry, maximum principle") {
  const Model& m = default_model();
  auto W0 = [](double y) { return y * std::exp(-y * y); };
  const auto f = solve_limit_mc(m, W0, kT, -2.0, 0.25, 17, 400, 7);
  REQUIRE(f.mean.size() == kT.size());
  for (std::size_t i = 0; i < f.nx; ++i) CHECK(f.mean[0][i] == W0(f.x(i)));
  for (std::size_t ti = 0; ti < kT.size(); ++ti) {
    CHECK(f.mean[ti][8] == 0.0);
    for (std::size_t i = 0; i < f.nx; ++i) {
      // odd data stay odd in law
      const std::size_t j = f.nx - 1 - i;
      const double se = std::hypot(f.stderr_[ti][i], f.stderr_[ti][j]);
      CHECK(std::abs(f.mean[ti][i] + f.mean[ti][j]) <= 4.5 * se + 1e-12);
      CHECK(std::abs(f.mean[ti][i]) <= 1.0 / std::sqrt(2.0 * std::exp(1.0)) + 1e-12);
    }
  }
}

TEST_CASE("inconsistent boundary data are rejected") {
  const Model& m = default_model();
  CHECK_THROWS_AS(solve_limit_mc(m, [](double) { return 1.0; }, kT, -1.0, 0.5, 5, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(solve_limit_mc(m, [](double y) { return std::abs(y); }, kT, -1.0, 0.5, 5, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("weak residual of a constant field vanishes") {
  const Model& m = default_model();
  const auto f = synthetic(0.3, [](double, double) { return 0.3; });
  const auto F = bump_fn(1.0, 0.8);
  CHECK(weak_residual(f, m, F, 2.0) == 0.0);
  const auto w = weak_terms(f, m, F);
  CHECK(w.lhs == 0.0);
  CHECK(w.form == 0.0);
}

TEST_CASE("weak terms are additive over time windows") {
  const Model& m = default_model();
  const auto f = synthetic(0.0, [](double t, double y) { return std::exp(-t) * y * std::exp(-y * y); });
  const auto F = bump_fn(1.0, 0.8);
  const auto all = weak_terms(f, m, F, 0, 3);
  const auto a = weak_terms(f, m, F, 0, 1);
  const auto b = weak_terms(f, m, F, 1, 3);
  CHECK(all.lhs == doctest::Approx(a.lhs + b.lhs).epsilon(1e-10));
  CHECK(all.form == doctest::Approx(a.form + b.form).epsilon(1e-10));
}

TEST_CASE("weak terms detect grid mismatch") {
  const Model& m = default_model();
  auto f = synthetic(0.0, [](double, double y) { return y * std::exp(-y * y); });
  const auto F = bump_fn(1.0, 0.8);
  auto kind = [&](const WeakSolutionField& g, std::size_t ia, std::size_t ib) -> std::string {
    try {
      weak_terms(g, m, F, ia, ib);
    } catch (const NumericError& e) {
      return e.kind();
    }
    return "";
  };
  CHECK(kind(f, 2, 1) == "GridMismatch");
  CHECK(kind(f, 0, 9) == "GridMismatch");
  f.x0 = -4.03;
  CHECK(kind(f, 0, 3) == "GridMismatch");
}

TEST_CASE("fitted coefficient is the least-squares slope over the bank") {
  const Model& m = default_model();
  const auto f = synthetic(0.0, [](double t, double y) { return std::exp(-t) * y * std::exp(-y * y); });
  const auto bank = default_test_bank();
  const auto fit = fit_coefficient(f, m, bank, {1.0, 2.0});
  double ab = 0.0, bb = 0.0;
  for (const auto& F : bank) {
    const auto w = weak_terms(f, m, F);
    ab += w.lhs * w.form;
    bb += w.form * w.form;
  }
  CHECK(fit.gamma_hat == doctest::Approx(ab / bb));
  CHECK(fit.predicted == doctest::Approx(m.constants().theta_bar * m.constants().r_bar_star / m.constants().c_alpha));
  CHECK(fit.sweep_residual.size() == 2);
}

TEST_CASE("kinetic vs limit comparison smoke") {
  ComparisonOptions opt;
  opt.blocks = 2;
  opt.reference_samples = 400;
  opt.lambda_ref = 1e4;
  const auto rows = kinetic_vs_limit(default_model(), {1e2}, 0.5, 1.0, 0.25, 200, 5, opt);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ks_blocks.size() == 2);
  CHECK(rows[0].ks_median > 0.0);
  CHECK(rows[0].ks_median <= 1.0);
  CHECK(rows[0].pairing_kinetic.size() == rows[0].pairing_limit.size());
}
