#include "kinstab/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <limits>

namespace kinstab {

double compensated_sum(const std::vector<double>& xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr r;
  r.n = xs.size();
  if (xs.empty()) return r;
  r.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  CompensatedSum ss;
  for (double x : xs) ss.add((x - r.mean) * (x - r.mean));
  const double var = ss.value() / static_cast<double>(xs.size() - 1);
  r.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  return r;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  if (xs.size() % 2 == 1) return xs[mid];
  const double hi = xs[mid];
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double integrate(const Fn& f, double a, double b, double tol, double* err_out) {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 15, tol, &err, &l1);
  if (err_out) *err_out = err;
  if (!std::isfinite(v) || err > std::max(1e3 * tol * std::max(1.0, l1), 1e-300))
    throw NumericError("QuadratureFailure",
                       "error estimate " + std::to_string(err) + " on [" +
                           std::to_string(a) + ", " + std::to_string(b) + "]");
  return v;
}

double integrate_to_inf(const Fn& f, double a, double tol) {
  boost::math::quadrature::exp_sinh<double> q;
  double err = 0.0;
  double l1 = 0.0;
  const double v = q.integrate([&](double x) { return f(a + x); }, 0.0,
                               std::numeric_limits<double>::infinity(), tol, &err, &l1);
  if (!std::isfinite(v))
    throw NumericError("QuadratureFailure", "non-finite semi-infinite integral");
  return v;
}

double find_root(const Fn& f, double lo, double hi, double xtol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw NumericError("InversionFailed", "root not bracketed");
  std::uintmax_t iters = 200;
  auto tolf = [xtol](double a, double b) { return std::abs(b - a) <= xtol; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tolf, iters);
  return 0.5 * (r.first + r.second);
}

LimitEstimate aitken_limit(const std::vector<double>& v) {
  LimitEstimate out;
  const std::size_t n = v.size();
  if (n < 3) {
    out.value = n ? v.back() : 0.0;
    out.spread = 1.0;
    return out;
  }
  auto aitken = [](double a, double b, double c) {
    const double den = (c - b) - (b - a);
    if (den == 0.0 || !std::isfinite(den)) return c;
    return c - (c - b) * (c - b) / den;
  };
  const double e1 = aitken(v[n - 3], v[n - 2], v[n - 1]);
  const double e0 = n >= 4 ? aitken(v[n - 4], v[n - 3], v[n - 2]) : v[n - 1];
  out.value = e1;
  out.spread = std::abs(e1 - e0) / std::max(std::abs(e1), 1e-300);
  return out;
}

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) /
                    static_cast<double>(n + m);
  const double sq = std::sqrt(ne);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace kinstab
