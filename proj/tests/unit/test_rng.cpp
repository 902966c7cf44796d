#include <doctest.h>

#include <cstdlib>
#include <set>
#include <stdexcept>

#include "kinstab/rng.hpp"

using namespace kinstab;

TEST_CASE("counter-based generators are reproducible and separated") {
  Rng a = sample_rng(42, Stream::kTest, 7), b = sample_rng(42, Stream::kTest, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng c = sample_rng(42, Stream::kTest, 8), d = sample_rng(42, Stream::kChain, 7);
  Rng e = sample_rng(42, Stream::kTest, 7);
  const auto x = e.next();
  CHECK(c.next() != x);
  CHECK(d.next() != x);
}

TEST_CASE("uniform and exponential moments") {
  Rng r = sample_rng(1, Stream::kTest, 0);
  const int n = 200000;
  double su = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    su += u;
    se += r.exponential();
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("parallel_for visits every index once whatever the worker count") {
  for (const char* w : {"1", "3", "8"}) {
    setenv("KINSTAB_WORKERS", w, 1);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  unsetenv("KINSTAB_WORKERS");
}

TEST_CASE("parallel_for propagates exceptions") {
  setenv("KINSTAB_WORKERS", "4", 1);
  CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) {
                    if (i == 37) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  unsetenv("KINSTAB_WORKERS");
}
