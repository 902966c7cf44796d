#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "kinstab/kinetic_mc.hpp"

using namespace kinstab;

namespace {

Model model_with(const char* p_zero, double p_c, double share) {
  FamilySpec s;
  s.p_zero = p_zero;
  s.p_c = p_c;
  s.transmit_share = share;
  return Model::build(make_params(s));
}

}  // namespace

TEST_CASE("path invariants between crossings") {
  const Model& m = default_model();
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng r = sample_rng(11, Stream::kTest, i);
    auto chain = sample_chain(r, m, 0.2, 3000);
    auto p = build_path(m, chain, 0.3, 100.0);
    apply_interface(r, m, p);
    for (std::size_t c = 1; c < p.crossing_index.size(); ++c)
      CHECK(p.crossing_index[c] > p.crossing_index[c - 1]);
    // between two crossings the free path stays on one side
    std::size_t start = 1;
    for (std::size_t c = 0; c <= p.crossing_index.size(); ++c) {
      const std::size_t stop = c < p.crossing_index.size() ? p.crossing_index[c] : p.positions.size();
      for (std::size_t n = start + 1; n < stop; ++n)
        CHECK(p.positions[n] * p.positions[start] > 0.0);
      start = stop;
    }
    if (p.absorbed_at) {
      CHECK(p.position_at(*p.absorbed_at) == 0.0);
      CHECK(p.position_at(*p.absorbed_at + 1.0) == 0.0);
      CHECK(p.frequency_at(*p.absorbed_at + 0.5) == 0.0);
    }
  }
}

TEST_CASE("full transmission leaves the free path untouched") {
  const Model m = model_with("constant", 0.0, 1.0);
  Rng r = sample_rng(5, Stream::kTest, 0);
  auto p = build_path(m, sample_chain(r, m, -0.1, 2000), 0.2, 50.0);
  apply_interface(r, m, p);
  CHECK_FALSE(p.absorbed_at.has_value());
  for (double t = 0.0; t < p.jump_times.back(); t += 0.37)
    CHECK(p.position_at(t) == p.free_position_at(t));
}

TEST_CASE("total absorption stops every path at its first crossing") {
  const Model m = model_with("constant", 1.0, 0.7);
  const auto draws = sample_Y_o_batch(m, 100.0, 1.0, 0.5, 0.1, 2000, 9);
  std::size_t absorbed = 0;
  for (const auto& d : draws) {
    if (d.absorbed) {
      ++absorbed;
      CHECK(d.position == 0.0);
      CHECK(d.crossings == 1u);
    } else {
      CHECK(d.position >= 0.0);
      CHECK(d.crossings == 0u);
    }
  }
  CHECK(absorbed > 100u);
}

TEST_CASE("first crossing probability equals the exponential bound") {
  const Model& m = default_model();
  const double k = m.S_inverse(2.0);
  const double lambda = std::pow(6.3496, m.alpha());
  const auto e = first_crossing_vs_bound(m, lambda, 1.0, k, 200000, 3);
  CHECK(e.bound == doctest::Approx(std::exp(-3.1748)).epsilon(1e-3));
  CHECK(std::abs(e.p_hat - e.bound) < 4.0 * std::sqrt(e.bound * (1 - e.bound) / 200000.0));
}

TEST_CASE("batches do not depend on the worker count") {
  const Model& m = default_model();
  setenv("KINSTAB_WORKERS", "1", 1);
  const auto a = sample_Y_o_batch(m, 1e3, 0.5, 1.0, 0.25, 300, 77);
  setenv("KINSTAB_WORKERS", "4", 1);
  const auto b = sample_Y_o_batch(m, 1e3, 0.5, 1.0, 0.25, 300, 77);
  unsetenv("KINSTAB_WORKERS");
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position == b[i].position);
    CHECK(a[i].absorbed == b[i].absorbed);
  }
}

TEST_CASE("constant data stays constant; absorbed paths give T_o") {
  const Model& m = default_model();
  const auto w = estimate_W(m, 1e3, [](double, double) { return 0.0; }, 1.0, {{1.0, 0.2}, {-0.5, -0.3}}, 200, 1);
  for (const auto& e : w) CHECK(e.mean == 0.0);
}

TEST_CASE("clock deviation shrinks with lambda") {
  const Model& m = default_model();
  std::vector<double> lo, hi;
  for (std::uint64_t i = 0; i < 60; ++i) {
    Rng a = sample_rng(21, Stream::kClock, i), b = sample_rng(22, Stream::kClock, i);
    lo.push_back(clock_lln_gap(a, m, 1e2, 1.0, 0.25));
    hi.push_back(clock_lln_gap(b, m, 1e4, 1.0, 0.25));
  }
  CHECK(median(hi) < median(lo));
  CHECK(median(hi) > 0.0);
}

TEST_CASE("L2 norm of the kinetic field does not increase in time") {
  const Model& m = default_model();
  auto W0 = [](double y, double) { return std::abs(y - 1.0) < 1.0 ? 1.0 - std::abs(y - 1.0) : 0.0; };
  std::vector<PhasePoint> pts;
  for (double y = -3.0; y <= 3.0; y += 0.25)
    for (double k : {-0.4, -0.2, 0.1, 0.3, 0.45})
      if (y != 0.0) pts.push_back({y, k});
  double prev = 1e300, prev_err = 0.0;
  for (double t : {0.0, 0.5, 1.0}) {
    const auto w = estimate_W(m, 1e3, W0, t, pts, 200, 8);
    double n2 = 0.0, var = 0.0;
    for (const auto& e : w) {
      n2 += e.mean * e.mean;
      var += 4.0 * e.mean * e.mean * e.stderr_ * e.stderr_;
    }
    const double err = std::sqrt(var);
    CHECK(n2 <= prev + 3.0 * (err + prev_err));
    prev = n2;
    prev_err = err;
  }
}
