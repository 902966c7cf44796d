#include "kinstab/levy_limit.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace kinstab {

namespace {

constexpr double kPi = std::numbers::pi;

// Unit symmetric stable variate, E exp(iuX) = exp(-|u|^alpha).
double cms_unit(Rng& rng, double alpha) {
  const double V = kPi * (rng.uniform_open() - 0.5);
  const double W = rng.exponential();
  const double a = std::sin(alpha * V) / std::pow(std::cos(V), 1.0 / alpha);
  const double b = std::pow(std::cos((1.0 - alpha) * V) / W, (1.0 - alpha) / alpha);
  return a * b;
}

// -Gamma(-alpha) cos(pi alpha / 2) * 2, so that sigma^alpha = dt * C * stable_k.
double stable_k(double alpha) {
  return -2.0 * boost::math::tgamma(-alpha) * std::cos(kPi * alpha / 2.0);
}

std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  boost::random::poisson_distribution<std::uint64_t, double> d(mean);
  return d(rng);
}

// Applies the interface rule to a jump x -> xn. w is the unscaled jump size
// |X| that selects p~. Returns false when the path is killed.
bool interface_step(Rng& rng, const Model& m, double w, double x, double& xn) {
  if (x * xn > 0.0) return true;
  if (xn == 0.0) return false;
  const double u = rng.uniform();
  const double pp = m.pt_plus(w);
  if (u < pp) return true;
  if (u < pp + m.pt_minus(w)) {
    xn = -xn;
    return true;
  }
  return false;
}

void check_budget(std::uint64_t n) {
  if (n >= kMaxLevySteps)
    throw NumericError("PathBudgetExceeded",
                       "Levy path exceeded " + std::to_string(kMaxLevySteps) + " events");
}

// n exact jumps from x; false when killed.
bool exact_jumps(Rng& rng, const Model& m, double sc, std::uint64_t n, double& x) {
  for (std::uint64_t i = 0; i < n; ++i) {
    const double X = m.sample_x(rng);
    double xn = x + sc * X;
    if (!interface_step(rng, m, std::abs(X), x, xn)) return false;
    x = xn;
  }
  return true;
}

LevyDraw hat_exact(Rng& rng, const Model& m, double lambda, double t, double y) {
  LevyDraw out;
  const double sc = std::pow(lambda, -1.0 / m.alpha());
  const std::uint64_t n = poisson(rng, lambda * t);
  check_budget(n);
  out.events = n;
  double x = y;
  if (!exact_jumps(rng, m, sc, n, x)) {
    out.killed = true;
    return out;
  }
  out.position = x;
  return out;
}

LevyDraw hat_hybrid(Rng& rng, const Model& m, double lambda, double t, double y,
                    const HybridOptions& o) {
  LevyDraw out;
  const double alpha = m.alpha();
  const double la = std::pow(lambda, 1.0 / alpha);
  const double sc = 1.0 / la;
  const double var_pref = 2.0 * std::pow(lambda, 1.0 - 2.0 / alpha);
  double x = y;
  double rem = t;
  while (rem > 0.0) {
    const double d = std::abs(x);
    const double B = la * o.eps * d;
    if (B < o.exact_below) {
      const double dt = std::min(rem, o.chunk / lambda);
      const std::uint64_t n = poisson(rng, lambda * dt);
      out.events += n;
      if (!exact_jumps(rng, m, sc, n, x)) {
        out.killed = true;
        return out;
      }
      rem -= dt;
      check_budget(out.events);
      continue;
    }
    const double T = m.fast_survival(B);
    const double var_rate = var_pref * m.fast_m2(B);
    const double dt = std::min(rem, (o.eta * d) * (o.eta * d) / var_rate);
    const double tb = rng.exponential() / (lambda * T);
    const double leap = tb < dt ? tb : dt;
    // aggregated small jumps
    const double g = std::sqrt(var_rate * leap) * rng.normal();
    double xn = x + g;
    if (!interface_step(rng, m, la * std::abs(g), x, xn)) {
      out.killed = true;
      return out;
    }
    x = xn;
    rem -= leap;
    ++out.events;
    if (tb < dt) {
      // one jump from the tail beyond B
      const std::uint64_t bits = rng.next();
      const double U = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53 * T;
      const double w = m.x_from_survival(U);
      xn = x + ((bits & 1u) ? sc * w : -sc * w);
      if (!interface_step(rng, m, w, x, xn)) {
        out.killed = true;
        return out;
      }
      x = xn;
    }
    check_budget(out.events);
  }
  out.position = x;
  return out;
}

}  // namespace

double stable_sigma(double alpha, double C, double dt) {
  return std::pow(dt * C * stable_k(alpha), 1.0 / alpha);
}

double sample_stable_increment(Rng& rng, double alpha, double C, double dt) {
  return stable_sigma(alpha, C, dt) * cms_unit(rng, alpha);
}

double stable_abs_median(double alpha) {
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(alpha); it != cache.end()) return it->second;
  Rng rng(0x5eed0a1fULL);
  std::vector<double> v(1 << 17);
  for (auto& x : v) x = std::abs(cms_unit(rng, alpha));
  const double med = median(std::move(v));
  cache.emplace(alpha, med);
  return med;
}

double hat_r_lambda(const Model& m, double lambda, double y, double yp) {
  const double la = std::pow(lambda, 1.0 / m.alpha());
  const double pref = lambda * la;
  auto rb = [&](double z) { return pref * m.fast_bar_r(la * std::abs(z)); };
  // reflections land on the starting side
  if (y * yp > 0.0) return rb(yp - y) + m.pt_minus(la * std::abs(yp + y)) * rb(yp + y);
  return m.pt_plus(la * std::abs(yp - y)) * rb(yp - y);
}

JumpKernelTable make_jump_table(const Model& m, double lambda, std::size_t proposals,
                                std::uint64_t seed) {
  JumpKernelTable t;
  t.lambda = lambda;
  t.envelope_rate = lambda;
  for (double y = 1e-6; y <= 1e3; y *= 1.25) {
    t.y.push_back(y);
    t.kill_rate.push_back(m.kill_rate(lambda, y));
  }
  // acceptance of a crossing proposal of size w is p~+ + p~- + p~0 split
  // into three outcomes; it must never exceed one
  Rng rng = sample_rng(seed, Stream::kHatZ, 0xe17e);
  for (std::size_t i = 0; i < proposals; ++i) {
    const double w = std::abs(m.sample_x(rng));
    const double a = m.pt_plus(w) + m.pt_minus(w) + m.pt_zero(w);
    const double lo = std::min({m.pt_plus(w), m.pt_minus(w), m.pt_zero(w)});
    t.max_acceptance = std::max(t.max_acceptance, a);
    if (a > 1.0 + 1e-9 || lo < 0.0)
      throw NumericError("RateEnvelopeViolation",
                         "interface split at w = " + std::to_string(w) + " sums to " + std::to_string(a));
  }
  t.proposals = proposals;
  return t;
}

LevyDraw sample_hat_Z_o(Rng& rng, const Model& m, double lambda, double t, double y,
                        HatZMethod method, const HybridOptions& opt) {
  if (t <= 0.0) return LevyDraw{y, false, 0};
  if (method == HatZMethod::kAuto)
    method = lambda > 2e5 ? HatZMethod::kHybrid : HatZMethod::kExact;
  return method == HatZMethod::kExact ? hat_exact(rng, m, lambda, t, y)
                                      : hat_hybrid(rng, m, lambda, t, y, opt);
}

HatZPath sample_hat_Z_path(Rng& rng, const Model& m, double lambda, double t, double y) {
  HatZPath p;
  const double sc = std::pow(lambda, -1.0 / m.alpha());
  double F = y, s = 1.0, time = 0.0;
  bool alive = true;
  p.times.push_back(0.0);
  p.free.push_back(y);
  p.coupled.push_back(y);
  for (;;) {
    time += rng.exponential() / lambda;
    if (time > t) break;
    check_budget(p.times.size());
    const double X = m.sample_x(rng);
    const double Fn = F + sc * X;
    if (alive && F * Fn <= 0.0) {
      // the coupled path jumps by s X, so it crosses exactly when F does
      double xn = s * Fn;
      if (!interface_step(rng, m, std::abs(X), s * F, xn)) {
        alive = false;
        p.killed_at = time;
      } else if (xn != s * Fn) {
        s = -s;
      }
    }
    F = Fn;
    p.times.push_back(time);
    p.free.push_back(F);
    p.coupled.push_back(alive ? s * F : 0.0);
  }
  return p;
}

StablePathConfig limit_config(const Model& m) {
  const auto& c = m.constants();
  StablePathConfig cfg;
  cfg.alpha = c.alpha;
  cfg.scale = c.r_bar_star;
  cfg.p_plus = c.p_plus0;
  cfg.p_minus = c.p_minus0;
  return cfg;
}

namespace {

struct ZetaStepper {
  const StablePathConfig& cfg;
  double K, med, pp;
  explicit ZetaStepper(const StablePathConfig& c)
      : cfg(c),
        K(c.scale * stable_k(c.alpha)),
        med(stable_abs_median(c.alpha)),
        pp(c.p_plus / (c.p_plus + c.p_minus)) {
    if (c.step_fraction > 1.0 / 50.0)
      throw NumericError("StepResolutionTooCoarse",
                         "median step must stay below |x|/50, got fraction " +
                             std::to_string(c.step_fraction));
  }
  // Advances x by up to `rem`; returns the time used, or -1 when killed.
  double step(Rng& rng, double& x, double rem) const {
    const double target = cfg.step_fraction * std::abs(x) / med;
    const double dt = std::min(rem, std::pow(target, cfg.alpha) / K);
    double xn = x + std::pow(dt * K, 1.0 / cfg.alpha) * cms_unit(rng, cfg.alpha);
    if (x * xn <= 0.0 && rng.uniform() >= pp) xn = -xn;
    x = xn;
    if (std::abs(x) < cfg.h) return -1.0;
    return dt;
  }
};

}  // namespace

LevyDraw sample_zeta_o(Rng& rng, const StablePathConfig& cfg, double t, double y) {
  const ZetaStepper st(cfg);
  LevyDraw out;
  if (std::abs(y) < cfg.h) {
    out.killed = true;
    return out;
  }
  double x = y;
  double rem = cfg.time_scale * t;
  while (rem > 0.0) {
    const double used = st.step(rng, x, rem);
    ++out.events;
    if (used < 0.0) {
      out.killed = true;
      out.position = 0.0;
      return out;
    }
    rem -= used;
    check_budget(out.events);
  }
  out.position = x;
  return out;
}

std::vector<double> sample_zeta_o_path(Rng& rng, const StablePathConfig& cfg,
                                       const std::vector<double>& times, double y) {
  const ZetaStepper st(cfg);
  std::vector<double> out(times.size(), std::numeric_limits<double>::quiet_NaN());
  if (std::abs(y) < cfg.h) return out;
  double x = y, now = 0.0;
  std::uint64_t events = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double rem = cfg.time_scale * times[i] - now;
    while (rem > 1e-15) {
      const double used = st.step(rng, x, rem);
      if (used < 0.0) return out;
      rem -= used;
      now += used;
      check_budget(++events);
    }
    out[i] = x;
  }
  return out;
}

LevySampler hat_z_sampler(const Model& m, double lambda, HatZMethod method) {
  return [&m, lambda, method](Rng& rng, double t, double y) {
    return sample_hat_Z_o(rng, m, lambda, t, y, method);
  };
}

LevySampler zeta_sampler(const StablePathConfig& cfg) {
  return [cfg](Rng& rng, double t, double y) { return sample_zeta_o(rng, cfg, t, y); };
}

std::vector<LevyDraw> sample_batch(const LevySampler& s, double t, double y, std::size_t n,
                                   std::uint64_t seed, Stream stream, std::uint64_t first_index) {
  std::vector<LevyDraw> out(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = sample_rng(seed, stream, first_index + i);
    out[i] = s(rng, t, y);
  });
  return out;
}

EmpiricalMeasure to_measure(const std::vector<LevyDraw>& draws) {
  std::vector<double> v(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) v[i] = draws[i].killed ? 0.0 : draws[i].position;
  return EmpiricalMeasure(std::move(v));
}

namespace {

SemigroupEstimate pointwise(const LevySampler& s, double t, const std::vector<double>& query,
                            std::size_t N, std::uint64_t seed,
                            const std::function<double(const LevyDraw&)>& g) {
  SemigroupEstimate est;
  est.y = query;
  for (std::size_t j = 0; j < query.size(); ++j) {
    std::vector<double> vals(N);
    const std::uint64_t base = static_cast<std::uint64_t>(j) << 40;
    parallel_for(N, [&](std::size_t i) {
      Rng rng = sample_rng(seed, Stream::kSemigroup, base + i);
      vals[i] = g(s(rng, t, query[j]));
    });
    const auto ms = mean_stderr(vals);
    est.mean.push_back(ms.mean);
    est.stderr_.push_back(ms.stderr_);
  }
  return est;
}

// Draws from the piecewise-linear density proportional to w >= 0.
class GridDensity {
 public:
  explicit GridDensity(const GridFunction& w) : w_(w) {
    CompensatedSum s;
    cum_.push_back(0.0);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      if (w[i] < 0.0 || w[i + 1] < 0.0)
        throw std::invalid_argument("symmetry_defect: weights must be nonnegative");
      s.add(0.5 * (w[i] + w[i + 1]) * w.spacing());
      cum_.push_back(s.value());
    }
    mass_ = s.value();
    if (!(mass_ > 0.0)) throw std::invalid_argument("symmetry_defect: zero weight function");
  }
  double mass() const { return mass_; }
  double draw(Rng& rng) const {
    const double target = rng.uniform_open() * mass_;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin()) - 1;
    i = std::min(i, w_.size() - 2);
    const double a = w_[i], b = w_[i + 1];
    const double U = rng.uniform();
    double f;
    if (std::abs(b - a) < 1e-12 * std::max(a, b))
      f = U;
    else
      f = (-a + std::sqrt(a * a + (b * b - a * a) * U)) / (b - a);
    return w_.x(i) + f * w_.spacing();
  }

 private:
  const GridFunction& w_;
  std::vector<double> cum_;
  double mass_ = 0.0;
};

}  // namespace

SemigroupEstimate semigroup_apply(const LevySampler& s, const GridFunction& u, double t,
                                  const std::vector<double>& query, std::size_t N,
                                  std::uint64_t seed) {
  return pointwise(s, t, query, N, seed,
                   [&](const LevyDraw& d) { return d.killed ? 0.0 : u(d.position); });
}

SemigroupEstimate survival_curve(const LevySampler& s, double t, const std::vector<double>& grid,
                                 std::size_t N, std::uint64_t seed) {
  return pointwise(s, t, grid, N, seed,
                   [](const LevyDraw& d) { return d.killed ? 0.0 : 1.0; });
}

DefectEstimate symmetry_defect(const LevySampler& s, const GridFunction& u, const GridFunction& v,
                               double t, std::size_t N, std::uint64_t seed) {
  const GridDensity du(u), dv(v);
  auto pairing = [&](const GridDensity& start, const GridFunction& f, std::uint64_t offset) {
    std::vector<double> vals(N);
    parallel_for(N, [&](std::size_t i) {
      Rng rng = sample_rng(seed, Stream::kSemigroup, offset + i);
      const double y = start.draw(rng);
      const auto d = s(rng, t, y);
      vals[i] = d.killed ? 0.0 : f(d.position);
    });
    auto ms = mean_stderr(vals);
    ms.mean *= start.mass();
    ms.stderr_ *= start.mass();
    return ms;
  };
  const auto a = pairing(dv, u, 0);                       // <P_t u, v>
  const auto b = pairing(du, v, std::uint64_t{1} << 40);  // <u, P_t v>
  DefectEstimate e;
  e.uv = a.mean;
  e.vu = b.mean;
  e.defect = a.mean - b.mean;
  e.stderr_ = std::hypot(a.stderr_, b.stderr_);
  return e;
}

namespace {

const std::vector<std::pair<double, double>>& gl20() {
  static const auto nodes = [] {
    // Gauss-Legendre nodes on [-1, 1] by Newton on P_20
    std::vector<std::pair<double, double>> out;
    const int n = 20;
    for (int i = 1; i <= n; ++i) {
      double x = std::cos(kPi * (i - 0.25) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      out.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    return out;
  }();
  return nodes;
}

template <class F>
double gl(const F& f, double a, double b, int sub = 1) {
  double s = 0.0;
  const double w = (b - a) / sub;
  for (int j = 0; j < sub; ++j) {
    const double lo = a + j * w;
    const double c = lo + 0.5 * w, r = 0.5 * w;
    for (const auto& [x, wt] : gl20()) s += wt * f(c + r * x);
  }
  return s * 0.5 * w;
}

}  // namespace

double levy_symbol(const Model& m, double lambda, double xi) {
  if (xi == 0.0) return 0.0;
  const double a = std::abs(xi) * std::pow(lambda, -1.0 / m.alpha());
  // g(a) = 4 int_0^inf sin^2(pi a w) rbar(w) dw, up to W = 200 / a and the
  // averaged tail beyond (W sits on a full period, so the boundary term vanishes)
  auto f = [&](double w) {
    const double s = std::sin(kPi * a * w);
    return s * s * m.fast_bar_r(w);
  };
  const double half = 0.5 / a;
  CompensatedSum sum;
  for (double lo = 1e-14; lo < half;) {
    const double hi = std::min(half, lo * 2.0);
    sum.add(gl(f, lo, hi));
    lo = hi;
  }
  const int periods = 400;
  for (int j = 1; j < periods; ++j) sum.add(gl(f, j * half, (j + 1) * half));
  const double W = periods * half;
  const double g = 4.0 * sum.value() + m.fast_survival(W);
  return lambda * g;
}

double theta_star_profile(double alpha, double z, int sub) {
  // int_z^inf sin^2(pi y) y^-(1+alpha) dy = z^-alpha / (2 alpha) - C(z) / 2
  auto g = [alpha](double y) { return std::cos(2.0 * kPi * y) * std::pow(y, -1.0 - alpha); };
  CompensatedSum c;
  const double first = std::ceil(2.0 * z) / 2.0;
  if (first > z) c.add(gl(g, z, first, sub));
  const double N = std::floor(first) + 400.0;
  for (double lo = first; lo < N; lo += 0.5) c.add(gl(g, lo, lo + 0.5, sub));
  // integration by parts at an integer endpoint
  c.add((1.0 + alpha) * std::pow(N, -2.0 - alpha) / (4.0 * kPi * kPi));
  const double I = std::pow(z, -alpha) / (2.0 * alpha) - 0.5 * c.value();
  return std::pow(z, alpha) * I;
}

ThetaStar theta_star(double alpha) {
  ThetaStar out;
  double best = std::numeric_limits<double>::infinity();
  double zb = 1.0;
  for (double z = 1.0; z <= 20.0; z += 0.01) {
    const double v = theta_star_profile(alpha, z);
    if (v < best) {
      best = v;
      zb = z;
    }
  }
  const double lo = std::max(1.0, zb - 0.01), hi = zb + 0.01;
  const auto r = boost::math::tools::brent_find_minima(
      [alpha](double z) { return theta_star_profile(alpha, z); }, lo, hi, 50);
  if (r.second < best) {
    best = r.second;
    zb = r.first;
  }
  // the boundary z = 1 is admissible
  const double v1 = theta_star_profile(alpha, 1.0);
  if (v1 <= best) {
    best = v1;
    zb = 1.0;
  }
  out.value = best;
  out.argmin = zb;
  const double fine = theta_star_profile(alpha, zb, 2);
  out.refinement_change = std::abs(fine - best) / best;
  return out;
}

double d_modulus(const std::vector<double>& times, const std::vector<double>& values,
                 double delta, double t_star) {
  if (times.empty() || times.size() != values.size())
    throw std::invalid_argument("d_modulus: bad path");
  if (delta > t_star) delta = t_star;
  // candidate boundaries: epochs, a grid of step delta / 4 and t_star
  std::vector<double> cand{0.0, t_star};
  for (double t : times)
    if (t > 0.0 && t < t_star) cand.push_back(t);
  const double step = delta / 4.0;
  for (double t = step; t < t_star; t += step) cand.push_back(t);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  const std::size_t M = cand.size();
  std::vector<double> val(M);
  for (std::size_t i = 0; i < M; ++i) {
    auto it = std::upper_bound(times.begin(), times.end(), cand[i]);
    const std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    val[i] = values[k];
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(M, inf);
  best[0] = 0.0;
  const double tol = 1e-12 * std::max(1.0, t_star);
  for (std::size_t j = 1; j < M; ++j) {
    double lo = inf, hi = -inf;
    for (std::size_t i = j; i-- > 0;) {
      lo = std::min(lo, val[i]);
      hi = std::max(hi, val[i]);
      const double osc = hi - lo;
      if (osc >= best[j]) break;
      if (cand[j] - cand[i] + tol >= delta && best[i] < inf)
        best[j] = std::min(best[j], std::max(best[i], osc));
    }
  }
  return best[M - 1];
}

double extrapolated_ks(const EmpiricalMeasure& coarse, const EmpiricalMeasure& fine,
                       double h_ratio, double alpha, const EmpiricalMeasure& reference) {
  const double denom = std::pow(h_ratio, alpha - 1.0) - 1.0;
  std::vector<double> xs;
  xs.reserve(coarse.size() + fine.size() + reference.size());
  for (const auto* m : {&coarse, &fine, &reference})
    xs.insert(xs.end(), m->samples().begin(), m->samples().end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double d = 0.0;
  for (double x : xs) {
    const double ff = fine.cdf(x);
    const double fx = ff + (ff - coarse.cdf(x)) / denom;
    d = std::max(d, std::abs(fx - reference.cdf(x)));
  }
  return d;
}

}  // namespace kinstab
