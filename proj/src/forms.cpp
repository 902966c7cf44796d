#include "kinstab/forms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "kinstab/numerics.hpp"
#include "kinstab/rng.hpp"

namespace kinstab {

namespace {

// Kernel family of a form. `same` acts on pairs on one side of 0, `cross` on
// pairs on opposite sides, `refl` on same-side pairs through |y + y'|.
// Without an interface only `same` is used.
struct Kernels {
  bool interface = true;
  Fn same, cross, refl;                 // z > 0
  Fn same_tail, cross_tail, refl_tail;  // int_d^inf
  Fn same_m2;                           // int_0^b z^2 same(z) dz
  double cross_band_weight = 1.0;       // (cross + refl) / same near the diagonal
  Fn kill;                              // optional
};

struct Energy {
  double value = 0.0;
  double band = 0.0;
};

Energy energy_once(const GridFunction& u, const Kernels& K, int band_nodes) {
  Energy out;
  std::size_t lo = 0, hi = 0;
  if (!u.support(lo, hi)) return out;
  const std::size_t n = u.size();
  const double h = u.spacing();
  const long i0 = u.interface_index();
  if (K.interface && i0 < 0)
    throw NumericError("GridMismatch", "interface forms need x = 0 as a grid node");

  const std::size_t M = static_cast<std::size_t>(band_nodes);
  const std::size_t pad = M + 1;
  const std::size_t slo = lo > pad ? lo - pad : 0;
  const std::size_t shi = std::min(n - 1, hi + pad);

  std::vector<double> Ts(n, 0.0), Tt, Tr;
  for (std::size_t d = 1; d < n; ++d) Ts[d] = K.same(static_cast<double>(d) * h);
  if (K.interface) {
    Tt.assign(n, 0.0);
    Tr.assign(2 * n + 1, 0.0);
    for (std::size_t d = 1; d < n; ++d) Tt[d] = K.cross(static_cast<double>(d) * h);
    for (std::size_t s = 1; s < Tr.size(); ++s) Tr[s] = K.refl(static_cast<double>(s) * h);
  }

  // second-moment defect of the point sum over the first m offsets
  std::vector<double> D(M + 1);
  {
    double acc = 0.0;
    for (std::size_t m = 0; m <= M; ++m) {
      if (m > 0) {
        const double z = static_cast<double>(m) * h;
        acc += h * z * z * Ts[m];
      }
      D[m] = K.same_m2((static_cast<double>(m) + 0.5) * h) - acc;
    }
  }

  auto side = [&](std::size_t i) -> int {
    if (!K.interface) return 1;
    const long d = static_cast<long>(i) - i0;
    return d > 0 ? 1 : (d < 0 ? -1 : 0);
  };
  const double xL = u.x(0), xR = u.x(n - 1);

  std::vector<double> rows(shi - slo + 1, 0.0), bands(shi - slo + 1, 0.0);
  parallel_for(rows.size(), [&](std::size_t r) {
    const std::size_t i = slo + r;
    const double ui = u[i];
    const int si = side(i);
    CompensatedSum acc;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::size_t d = i > j ? i - j : j - i;
      double ker;
      if (!K.interface) {
        ker = Ts[d];
      } else {
        const int sj = side(j);
        if (si == 0 || sj == 0) {
          ker = 0.5 * (Ts[d] + Tr[d]) + 0.5 * Tt[d];
        } else if (si == sj) {
          const long s = static_cast<long>(i + j) - 2 * i0;
          ker = Ts[d] + Tr[static_cast<std::size_t>(std::labs(s))];
        } else {
          ker = Tt[d];
        }
      }
      if (j >= slo && j <= shi) {
        const double du = ui - u[j];
        acc.add(0.5 * du * du * ker);
      } else {
        acc.add(ui * ui * ker);
      }
    }
    double row = h * acc.value();

    // mass beyond the stored grid (u = 0 there)
    if (ui != 0.0) {
      const double x = u.x(i);
      double tail;
      if (!K.interface) {
        tail = K.same_tail(xR + 0.5 * h - x) + K.same_tail(x - xL + 0.5 * h);
      } else {
        const double pos = K.same_tail(xR + 0.5 * h - x) + K.refl_tail(xR + 0.5 * h + x) +
                           K.cross_tail(x - xL + 0.5 * h);
        const double neg = K.same_tail(x - xL + 0.5 * h) + K.refl_tail(-xL + 0.5 * h - x) +
                           K.cross_tail(xR + 0.5 * h - x);
        tail = si > 0 ? pos : (si < 0 ? neg : 0.5 * (pos + neg));
      }
      row += ui * ui * tail;
      if (K.kill) row += ui * ui * K.kill(x);
    }
    rows[r] = row;

    // near-diagonal band
    if (i > 0 && i + 1 < n) {
      const double up = (u[i + 1] - ui) / h, um = (ui - u[i - 1]) / h;
      auto dir = [&](bool toward_interface, std::size_t avail) {
        if (!K.interface || !toward_interface || avail >= M) return D[M];
        return D[avail] + K.cross_band_weight * (D[M] - D[avail]);
      };
      const long off = K.interface ? static_cast<long>(i) - i0 : 1;
      const std::size_t avail =
          off == 0 ? 0 : static_cast<std::size_t>(std::labs(off) - 1);
      const double Dp = dir(off <= 0, avail);
      const double Dm = dir(off >= 0, avail);
      bands[r] = 0.5 * (up * up * Dp + um * um * Dm);
    }
  });
  CompensatedSum total, band;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    total.add(h * rows[r]);
    band.add(h * bands[r]);
  }
  out.band = band.value();
  out.value = total.value() + out.band;
  return out;
}

FormReport evaluate(const GridFunction& u, const Kernels& K, const FormOptions& opt) {
  FormReport rep;
  rep.h = u.spacing();
  rep.band_treatment = "second-moment defect over " + std::to_string(opt.band_nodes) +
                       " nodes per side, one-sided slopes";
  const Energy e = energy_once(u, K, opt.band_nodes);
  rep.value = e.value;
  rep.band_correction = e.band;
  if (opt.refine && e.value != 0.0) {
    const Energy f = energy_once(refine(u), K, 2 * opt.band_nodes);
    rep.error_estimate = std::abs(f.value - e.value);
    rep.value = f.value;
    rep.band_correction = f.band;
    rep.h = 0.5 * u.spacing();
    if (rep.error_estimate > opt.rel_tol * std::abs(f.value))
      throw NumericError("QuadratureNotConverged",
                         "h-halving changed the form by " + std::to_string(rep.error_estimate));
  }
  return rep;
}

Kernels power_kernels(double beta, double scale, bool interface, double p_plus, double p_minus) {
  const double c = scale * c_alpha(beta);
  Kernels K;
  K.interface = interface;
  K.same = [=](double z) { return c * std::pow(z, -1.0 - beta); };
  K.same_tail = [=](double d) { return c * std::pow(d, -beta) / beta; };
  K.same_m2 = [=](double b) { return c * std::pow(b, 2.0 - beta) / (2.0 - beta); };
  K.cross = [=](double z) { return p_plus * c * std::pow(z, -1.0 - beta); };
  K.cross_tail = [=](double d) { return p_plus * c * std::pow(d, -beta) / beta; };
  K.refl = [=](double z) { return p_minus * c * std::pow(z, -1.0 - beta); };
  K.refl_tail = [=](double d) { return p_minus * c * std::pow(d, -beta) / beta; };
  K.cross_band_weight = p_plus + p_minus;
  return K;
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 2.0)) throw std::invalid_argument("form exponent must lie in (0, 2)");
}

}  // namespace

GridFunction make_grid_function(const std::function<double(double)>& f, double half_width,
                                double h) {
  const auto half = static_cast<long>(std::llround(half_width / h));
  std::vector<double> v(static_cast<std::size_t>(2 * half + 1));
  for (long i = -half; i <= half; ++i)
    v[static_cast<std::size_t>(i + half)] = f(static_cast<double>(i) * h);
  return GridFunction(-static_cast<double>(half) * h, h, std::move(v));
}

GridFunction refine(const GridFunction& u) {
  const std::size_t n = u.size();
  std::vector<double> v(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    v[2 * i] = u[i];
    if (i + 1 < n) v[2 * i + 1] = 0.5 * (u[i] + u[i + 1]);
  }
  return GridFunction(u.origin(), 0.5 * u.spacing(), std::move(v));
}

FormReport sobolev_energy(const GridFunction& u, double beta, const FormOptions& opt) {
  check_beta(beta);
  return evaluate(u, power_kernels(beta, 1.0, false, 1.0, 0.0), opt);
}

double sobolev_energy_exact(const GridFunction& u, double beta) {
  check_beta(beta);
  if (std::abs(beta - 1.0) < 1e-12)
    throw std::invalid_argument("sobolev_energy_exact: beta = 1 needs the logarithmic antiderivative");
  std::size_t lo = 0, hi = 0;
  if (!u.support(lo, hi)) return 0.0;
  const double h = u.spacing();
  // G'''' = c_beta |z|^(-1-beta); hat-hat overlaps give -(1/h^2) Delta^4 G
  const double K = c_alpha(beta) / ((3.0 - beta) * (2.0 - beta) * (1.0 - beta) * (-beta));
  auto G = [&](long d) { return K * std::pow(std::abs(static_cast<double>(d)) * h, 3.0 - beta); };
  const std::size_t m = hi - lo + 1;
  std::vector<double> a(m);
  for (std::size_t d = 0; d < m; ++d) {
    const long e = static_cast<long>(d);
    a[d] = -(G(e - 2) - 4.0 * G(e - 1) + 6.0 * G(e) - 4.0 * G(e + 1) + G(e + 2)) / (h * h);
  }
  std::vector<double> rows(m);
  parallel_for(m, [&](std::size_t r) {
    CompensatedSum acc;
    const double ui = u[lo + r];
    if (ui == 0.0) return;
    for (std::size_t s = 0; s < m; ++s) acc.add(ui * u[lo + s] * a[r > s ? r - s : s - r]);
    rows[r] = acc.value();
  });
  return compensated_sum(rows);
}

FormReport interface_energy(const GridFunction& u, double alpha, double p_plus, double p_minus,
                            const FormOptions& opt) {
  check_beta(alpha);
  if (p_plus < 0.0 || p_minus < 0.0 || p_plus + p_minus > 1.0 + 1e-12)
    throw std::invalid_argument("interface weights must be probabilities");
  return evaluate(u, power_kernels(alpha, 1.0, true, p_plus, p_minus), opt);
}

FormReport interface_form(const GridFunction& u, const GridFunction& v, double alpha,
                          double p_plus, double p_minus, const FormOptions& opt) {
  if (u.size() != v.size() || u.origin() != v.origin() || u.spacing() != v.spacing())
    throw NumericError("GridMismatch", "interface_form arguments live on different grids");
  std::vector<double> s(u.size()), d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    s[i] = u[i] + v[i];
    d[i] = u[i] - v[i];
  }
  const auto a = interface_energy(GridFunction(u.origin(), u.spacing(), s), alpha, p_plus, p_minus, opt);
  const auto b = interface_energy(GridFunction(u.origin(), u.spacing(), d), alpha, p_plus, p_minus, opt);
  FormReport r = a;
  r.value = 0.25 * (a.value - b.value);
  r.error_estimate = 0.25 * (a.error_estimate + b.error_estimate);
  r.band_correction = 0.25 * (a.band_correction - b.band_correction);
  return r;
}

FormReport lambda_form(const GridFunction& u, const Model& m, double lambda,
                       const FormOptions& opt) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double alpha = m.alpha();
  const double a = std::pow(lambda, 1.0 / alpha);
  const double amp = lambda * a;
  const Model* mp = &m;
  Kernels K;
  K.interface = true;
  K.same = [=](double z) { return amp * mp->fast_bar_r(a * z); };
  K.cross = [=](double z) { return mp->pt_plus(a * z) * amp * mp->fast_bar_r(a * z); };
  K.refl = [=](double z) { return mp->pt_minus(a * z) * amp * mp->fast_bar_r(a * z); };
  K.same_tail = [=](double d) { return 0.5 * lambda * mp->fast_survival(a * d); };
  K.cross_tail = [=](double d) { return mp->pt_plus(a * d) * 0.5 * lambda * mp->fast_survival(a * d); };
  K.refl_tail = [=](double d) { return mp->pt_minus(a * d) * 0.5 * lambda * mp->fast_survival(a * d); };
  K.same_m2 = [=](double b) { return std::pow(lambda, 1.0 - 2.0 / alpha) * mp->fast_m2(a * b); };
  const double w = a * u.spacing();
  K.cross_band_weight = m.pt_plus(w) + m.pt_minus(w);
  K.kill = [=](double y) { return mp->kill_rate(lambda, y); };
  return evaluate(u, K, opt);
}

FormReport limit_form(const GridFunction& u, const Model& m, const FormOptions& opt) {
  const auto& c = m.constants();
  FormReport r = interface_energy(u, m.alpha(), c.p_plus0, c.p_minus0, opt);
  const double s = c.r_bar_star / c.c_alpha;
  r.value *= s;
  r.error_estimate *= s;
  r.band_correction *= s;
  return r;
}

double l2_norm2(const GridFunction& u) {
  CompensatedSum acc;
  for (double x : u.values()) acc.add(x * x);
  return u.spacing() * acc.value();
}

double sobolev_norm2(const GridFunction& u, double beta) {
  return l2_norm2(u) + sobolev_energy_exact(u, beta);
}

namespace {

// int u^2 / |y|^beta on the grid subsampled by `step`: trapezoid from the
// first node off 0, linear model of u on the core cell.
double hardy_numerator(const GridFunction& u, double beta, long i0, long step) {
  const double h = u.spacing() * static_cast<double>(step);
  const long n = static_cast<long>(u.size());
  CompensatedSum acc;
  for (int sgn : {1, -1}) {
    for (long k = 1;; ++k) {
      const long i = i0 + sgn * k * step;
      if (i < 0 || i >= n) break;
      const double y = static_cast<double>(k) * h;
      const double v = u[static_cast<std::size_t>(i)];
      if (k == 1) acc.add(v * v * std::pow(h, 1.0 - beta) / (3.0 - beta));
      acc.add((k == 1 ? 0.5 : 1.0) * h * v * v * std::pow(y, -beta));
    }
  }
  return acc.value();
}

}  // namespace

HardyResult hardy_ratio(const GridFunction& u, double beta) {
  check_beta(beta);
  const long i0 = u.interface_index();
  if (i0 < 0) throw NumericError("GridMismatch", "hardy_ratio needs x = 0 as a grid node");
  const double N1 = hardy_numerator(u, beta, i0, 1);
  const double N2 = hardy_numerator(u, beta, i0, 2);
  const double N4 = hardy_numerator(u, beta, i0, 4);
  const double d1 = N1 - N2, d2 = N2 - N4;
  // a convergent numerator shrinks its increments by 2^-(3-beta); a
  // divergent one grows them by 2^(beta-1)
  if (std::abs(d1) > 1e-3 * std::abs(N1) && std::abs(d1) > 0.75 * std::abs(d2))
    throw NumericError("DivergentNumerator",
                       "numerator keeps growing under refinement (is u(0) != 0?)");
  HardyResult r;
  r.numerator = N1;
  r.denominator = sobolev_norm2(u, beta);
  r.ratio = r.denominator > 0.0 ? r.numerator / r.denominator : 0.0;
  return r;
}

std::vector<double> s_sequence(double p_plus, int m_max) {
  if (!(p_plus > 0.0 && p_plus <= 1.0)) throw std::invalid_argument("p_plus must lie in (0, 1]");
  const double p_minus = 1.0 - p_plus;
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(std::max(m_max, 0)));
  double cur = p_plus;
  for (int m = 1; m <= m_max; ++m) {
    s.push_back(cur);
    cur = cur * p_plus + (1.0 - cur) * p_minus;
  }
  return s;
}

namespace {

void check_exact_args(int num, int den, int m_max) {
  if (den <= 0 || num <= 0 || num > den) throw std::invalid_argument("need 0 < num <= den");
  // den^m must fit in 127 bits
  if (static_cast<double>(m_max) * std::log2(static_cast<double>(den)) > 126.0)
    throw std::invalid_argument("den^m_max overflows 128-bit integers");
}

}  // namespace

std::vector<unsigned __int128> s_sequence_exact(int num, int den, int m_max) {
  check_exact_args(num, den, m_max);
  using U = unsigned __int128;
  const U P = static_cast<U>(num), Q = static_cast<U>(den - num), B = static_cast<U>(den);
  std::vector<U> s;
  U cur = P, pow = B;  // s_m den^m and den^m
  for (int m = 1; m <= m_max; ++m) {
    s.push_back(cur);
    cur = cur * P + (pow - cur) * Q;
    pow *= B;
  }
  return s;
}

std::vector<unsigned __int128> s_sequence_enumerated(int num, int den, int m_max) {
  check_exact_args(num, den, m_max);
  if (m_max > 24) throw std::invalid_argument("enumeration is limited to m <= 24");
  using U = unsigned __int128;
  const U P = static_cast<U>(num), Q = static_cast<U>(den - num);
  std::vector<U> s;
  for (int m = 1; m <= m_max; ++m) {
    // product over a sign sequence with j minus signs: P^(m-j) Q^j
    std::vector<U> term(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) {
      U t = 1;
      for (int q = 0; q < m - j; ++q) t *= P;
      for (int q = 0; q < j; ++q) t *= Q;
      term[static_cast<std::size_t>(j)] = t;
    }
    U acc = 0;
    const std::uint32_t count = 1u << m;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
      const int minus = std::popcount(mask);
      if (minus % 2 == 0) acc += term[static_cast<std::size_t>(minus)];
    }
    s.push_back(acc);
  }
  return s;
}

double killing_bound_constant(const Model& m, double lambda, const std::vector<double>& ys) {
  const double alpha = m.alpha();
  const double a = std::pow(lambda, 1.0 / alpha);
  const double kappa = m.params().kappa;
  double c = std::numeric_limits<double>::infinity();
  for (double y : ys) {
    const double ay = std::abs(y);
    const double bound =
        std::pow(1.0 + std::log1p(a * ay), -kappa) / std::pow(1.0 / a + ay, alpha);
    c = std::min(c, m.kill_rate(lambda, y) / bound);
  }
  return c;
}

GammaReport gamma_harness(const Model& m, const std::vector<GridFunction>& family,
                          const std::vector<double>& lambdas, std::uint64_t seed) {
  GammaReport rep;
  const auto& c = m.constants();
  rep.equiv_lower = std::min(c.p_plus0, 0.5);
  rep.equiv_upper = 1.0 + c.p_minus0;
  const double alpha = m.alpha();
  for (std::size_t f = 0; f < family.size(); ++f) {
    const GridFunction& u = family[f];
    const double E_lim = limit_form(u, m).value;
    const double E_hat = interface_energy(u, alpha, c.p_plus0, c.p_minus0).value;
    const double E_free = sobolev_energy(u, alpha).value;
    const double equiv = E_free > 0.0 ? E_hat / E_free : 0.0;

    // smooth noise living on the support of u, so u(0) = 0 is kept
    GridFunction noise(u.origin(), u.spacing(), std::vector<double>(u.size(), 0.0));
    std::size_t lo = 0, hi = 0;
    if (u.support(lo, hi) && hi > lo) {
      Rng rng = sample_rng(seed, Stream::kForms, f);
      std::vector<double> amp(8);
      for (std::size_t k = 0; k < amp.size(); ++k)
        amp[k] = rng.normal() / static_cast<double>((k + 1) * (k + 1));
      const double a = u.x(lo), b = u.x(hi);
      for (std::size_t i = lo; i <= hi; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < amp.size(); ++k)
          s += amp[k] * std::sin(static_cast<double>(k + 1) * std::numbers::pi * (u.x(i) - a) / (b - a));
        noise[i] = s;
      }
      // keep only the part orthogonal to u in the limit form, so that
      // E°[u + eps n] >= E°[u] and the probe isolates the lambda dependence
      FormOptions quick;
      quick.refine = false;
      const double un = interface_form(u, noise, alpha, c.p_plus0, c.p_minus0, quick).value;
      const double uu = interface_energy(u, alpha, c.p_plus0, c.p_minus0, quick).value;
      if (uu > 0.0)
        for (std::size_t i = lo; i <= hi; ++i) noise[i] -= un / uu * u[i];
    }
    for (double lambda : lambdas) {
      GammaRow row;
      row.function = f;
      row.lambda = lambda;
      row.E_lambda = lambda_form(u, m, lambda).value;
      row.E_limit = E_lim;
      row.rel_gap = E_lim > 0.0 ? std::abs(row.E_lambda - E_lim) / E_lim : 0.0;
      const double eps = std::pow(lambda, -1.0 / (2.0 * alpha));
      std::vector<double> pv(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) pv[i] = u[i] + eps * noise[i];
      FormOptions quick;
      quick.refine = false;
      row.E_perturbed = lambda_form(GridFunction(u.origin(), u.spacing(), pv), m, lambda, quick).value;
      row.equiv_ratio = equiv;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace kinstab
