#include "kinstab/model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <stdexcept>

namespace kinstab {

namespace {

constexpr double kPi = std::numbers::pi;

using GL20 = boost::math::quadrature::gauss<double, 20>;
using GL8 = boost::math::quadrature::gauss<double, 8>;

// Gauss-Legendre nodes/weights mapped to [a, b].
template <class GL>
void gl_nodes(double a, double b, std::vector<double>& xs, std::vector<double>& ws) {
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  const double m = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      xs.push_back(m);
      ws.push_back(r * w[i]);
      continue;
    }
    xs.push_back(m - r * x[i]);
    ws.push_back(r * w[i]);
    xs.push_back(m + r * x[i]);
    ws.push_back(r * w[i]);
  }
}

template <class GL, class F>
double gl_integrate(F&& f, double a, double b) {
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  const double m = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0)
      s += w[i] * f(m);
    else
      s += w[i] * (f(m - r * x[i]) + f(m + r * x[i]));
  }
  return r * s;
}

// Geometric breakpoints 1/2, 1/4, ... used for integrands concentrated at k -> 0.
constexpr int kGeomLevels = 44;

// Integral over (0, 1/2] on geometric levels with a fixed 40-point rule per
// level; the integrands used here are smooth in log k.
double geometric_integral(const Fn& f) {
  CompensatedSum s;
  double hi = 0.5;
  for (int j = 0; j < kGeomLevels; ++j) {
    const double lo = hi * 0.5;
    s.add(gl_integrate<GL20>(f, lo, hi));
    hi = lo;
  }
  return s.value();
}

LimitEstimate limit_at_zero(const std::function<double(double)>& g) {
  std::vector<double> v;
  double k = 0.02;
  for (int m = 0; m < 10; ++m, k *= 0.5) v.push_back(g(k));
  return aitken_limit(v);
}

}  // namespace

double sin_power_norm(double beta) {
  return std::tgamma(0.5 * (beta + 1.0)) / (std::sqrt(kPi) * std::tgamma(0.5 * beta + 1.0));
}

ModelParams make_params(const FamilySpec& s) {
  ModelParams p;
  p.gamma = s.gamma;
  p.T_o = s.T_o;
  p.kappa = s.kappa;
  p.beta1 = s.beta1;
  p.beta2 = s.beta2;
  p.beta3 = s.beta3;
  if (s.omega != "abs_sin") throw std::invalid_argument("unknown omega family: " + s.omega);
  p.omega_bar = [](double k) { return std::abs(std::sin(kPi * k)); };
  p.omega_prime = [](double k) {
    if (k == 0.0) return 0.0;
    const double v = kPi * std::cos(kPi * k);
    return k > 0 ? v : -v;
  };
  auto density = [](const std::string& fam, double beta) -> KFn {
    if (fam == "uniform") return [](double) { return 1.0; };
    if (fam != "sin_power") throw std::invalid_argument("unknown R family: " + fam);
    const double c = 1.0 / sin_power_norm(beta);
    return [c, beta](double k) { return c * std::pow(std::abs(std::sin(kPi * k)), beta); };
  };
  p.R1 = density(s.R1, s.beta1);
  p.R2 = density(s.R2, s.beta2);
  if (s.omega == "abs_sin" && s.R1 == "sin_power") {
    const double c = 1.0 / sin_power_norm(s.beta1);
    const double g = s.gamma;
    const double b = s.beta1;
    p.S_prime = [c, g, b](double k) {
      const double x = kPi * std::abs(k);
      const double sn = std::sin(x);
      const double cs = std::cos(x);
      return -(kPi * kPi / (g * c)) * std::pow(sn, -b - 1.0) * (sn * sn + b * cs * cs);
    };
  }
  const double pc = s.p_c;
  const double kappa = s.kappa;
  if (s.p_zero == "log_decay") {
    p.p_zero = [pc, kappa](double k) {
      const double a = std::abs(k);
      if (a == 0.0) return 0.0;
      return pc / std::pow(1.0 + std::log(1.0 / a), kappa);
    };
  } else if (s.p_zero == "constant") {
    p.p_zero = [pc](double) { return pc; };
  } else {
    throw std::invalid_argument("unknown p_zero family: " + s.p_zero);
  }
  const double a = s.transmit_share;
  auto p0 = p.p_zero;
  p.p_plus = [a, p0](double k) { return a * (1.0 - p0(k)); };
  p.p_minus = [a, p0](double k) { return (1.0 - a) * (1.0 - p0(k)); };
  return p;
}

ModelParams default_params() { return make_params(FamilySpec{}); }

double c_alpha(double alpha) {
  return std::pow(2.0, alpha) * std::tgamma(0.5 * (1.0 + alpha)) /
         (std::sqrt(kPi) * std::abs(std::tgamma(-0.5 * alpha)));
}

double q_alpha(double alpha, double y) {
  return c_alpha(alpha) / std::pow(std::abs(y), 1.0 + alpha);
}

UniformTable::UniformTable(double x0, double x1, std::vector<double> values)
    : x0_(x0), x1_(x1), v_(std::move(values)) {
  if (v_.size() < 2 || !(x1 > x0)) throw std::invalid_argument("UniformTable: bad grid");
  inv_dx_ = static_cast<double>(v_.size() - 1) / (x1 - x0);
}

std::string ValidationReport::to_json() const {
  nlohmann::json j;
  j["valid"] = ok();
  j["issues"] = nlohmann::json::array();
  for (const auto& i : issues)
    j["issues"].push_back({{"kind", i.kind}, {"detail", i.detail}, {"k", i.k}});
  return j.dump(2);
}

// --- kernel evaluation -----------------------------------------------------

double Model::omega_prime(double k) const {
  if (k == 0.0) return 0.0;
  if (p_.omega_prime) return p_.omega_prime(k);
  const double h = std::min(1e-6, 1e-4 * std::abs(k));
  return (p_.omega_bar(k + h) - p_.omega_bar(k - h)) / (2.0 * h);
}

double Model::t_bar(double k) const {
  const double r = p_.R1(k);
  return r > 0.0 ? 1.0 / (p_.gamma * r) : std::numeric_limits<double>::infinity();
}

double Model::S(double k) const {
  if (k == 0.0) return 0.0;
  const double r = p_.R1(k);
  if (!(r > 0.0)) return k > 0 ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
  return omega_prime(k) / (p_.gamma * r);
}

double Model::S_prime(double k) const {
  if (p_.S_prime) return p_.S_prime(k);
  const double h = std::min(1e-6, 1e-4 * std::abs(k));
  return (S(k + h) - S(k - h)) / (2.0 * h);
}

KernelValues Model::kernel(double k) const {
  KernelValues v{};
  v.omega = p_.omega_bar(k);
  v.omega_prime = omega_prime(k);
  v.R1 = p_.R1(k);
  v.R2 = p_.R2(k);
  v.t_bar = t_bar(k);
  v.S = S(k);
  v.p_plus = p_.p_plus(k);
  v.p_minus = p_.p_minus(k);
  v.p_zero = p_.p_zero(k);
  return v;
}

double Model::S_inverse(double w) const {
  if (!(w > 0.0)) throw NumericError("InversionFailed", "S^-1 needs w > 0");
  const double s_half = S(0.5);
  if (w <= s_half) {
    if (w == s_half) return 0.5;
    throw NumericError("InversionFailed", "w below the range of S");
  }
  // S decreases on (0, 1/2]; walk down until S(lo) >= w.
  double lo = 0.25;
  while (S(lo) < w) {
    lo *= 0.5;
    if (lo < 1e-300) throw NumericError("InversionFailed", "w above the range of S");
  }
  double hi = std::min(0.5, 2.0 * lo);
  if (lo == 0.25) hi = 0.5;
  return find_root([&](double k) { return S(k) - w; }, lo, hi, 1e-12 * std::max(lo, 1e-300) + 1e-300);
}

double Model::s_density(double y) const {
  if (y == 0.0) throw std::invalid_argument("s_density: y = 0");
  const double k = S_inverse(std::abs(y));
  return p_.R2(k) / std::abs(S_prime(k));
}

double Model::bar_r(double y) const {
  if (y == 0.0) throw std::invalid_argument("bar_r: y = 0 is the kernel singularity");
  const double w = std::abs(y);
  auto f = [&](double k) {
    const double s = S(k);
    if (!(s > 0.0) || !std::isfinite(s)) return 0.0;
    return p_.R2(k) * std::exp(-w / s) / s;
  };
  return geometric_integral(f);
}

double Model::bar_r_lambda(double lambda, double y) const {
  const double a = std::pow(lambda, 1.0 / c_.alpha);
  return lambda * a * bar_r(a * y);
}

double Model::x_survival(double w) const {
  if (w <= 0.0) return 1.0;
  auto f = [&](double k) {
    const double s = S(k);
    if (!(s > 0.0) || !std::isfinite(s)) return 0.0;
    return p_.R2(k) * std::exp(-w / s);
  };
  return 2.0 * geometric_integral(f);
}

// --- fast table lookups ----------------------------------------------------

double Model::fast_survival(double w) const noexcept {
  const auto& t = *t_;
  if (w <= 0.0) return 1.0;
  const double lw = std::log(w);
  if (lw < t.log_w_min) return 1.0;
  if (lw > t.log_w_max) return t.x_tail_const * std::pow(w, -c_.alpha);
  return std::exp(t.log_survival(lw));
}

double Model::fast_bar_r(double w) const noexcept {
  const auto& t = *t_;
  w = std::abs(w);
  const double lw = std::log(std::max(w, 1e-300));
  if (lw > t.log_w_max) {
    const double wm = std::exp(t.log_w_max);
    return std::exp(t.log_rbar.values().back()) * std::pow(w / wm, -1.0 - c_.alpha);
  }
  return std::exp(t.log_rbar(lw));
}

double Model::fast_m2(double w) const noexcept {
  const auto& t = *t_;
  if (w <= 0.0) return 0.0;
  const double lw = std::log(w);
  if (lw < t.log_w_min) return 0.0;
  if (lw > t.log_w_max) {
    const double wm = std::exp(t.log_w_max);
    return t.m2.values().back() +
           t.m2_tail_slope * (std::pow(w, 2.0 - c_.alpha) - std::pow(wm, 2.0 - c_.alpha));
  }
  return t.m2(lw);
}

double Model::fast_kill_tail(double w) const noexcept {
  const auto& t = *t_;
  const double lw = std::log(std::max(std::abs(w), 1e-300));
  if (lw > t.log_w_max) {
    const double wm = std::exp(t.log_w_max);
    return t.kill_tail.values().back() * std::pow(std::abs(w) / wm, -c_.alpha);
  }
  return t.kill_tail(lw);
}

double Model::pt_zero(double w) const noexcept {
  return t_->pt_zero(std::log(std::max(std::abs(w), 1e-300)));
}
double Model::pt_plus(double w) const noexcept {
  return t_->pt_plus(std::log(std::max(std::abs(w), 1e-300)));
}
double Model::pt_minus(double w) const noexcept {
  return t_->pt_minus(std::log(std::max(std::abs(w), 1e-300)));
}

double Model::kill_rate(double lambda, double y) const noexcept {
  return lambda * fast_kill_tail(std::pow(lambda, 1.0 / c_.alpha) * std::abs(y));
}

double Model::x_from_survival(double U) const noexcept {
  const auto& t = *t_;
  if (U >= t.x_u_split) return t.x_bulk(U);
  if (U >= t.x_u_min) return std::exp(t.x_tail_log(-std::log(U)));
  return std::pow(t.x_tail_const / U, 1.0 / c_.alpha);
}

double Model::abs_k_quantile(double u) const noexcept {
  const auto& t = *t_;
  if (u >= t.freq_u_tail) return t.k_bulk(u);
  return t.k_tail(std::pow(u, t.freq_tail_exp));
}

Model::FreqDraw Model::sample_frequency(Rng& rng) const noexcept {
  const auto& t = *t_;
  const std::uint64_t bits = rng.next();
  const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  const bool neg = bits & 1u;
  FreqDraw d;
  if (u >= t.freq_u_tail) {
    d.k = t.k_bulk(u);
    d.S = t.S_bulk(u);
    d.t_bar = t.tb_bulk(u);
  } else {
    d.k = t.k_tail(std::pow(u, t.freq_tail_exp));
    d.S = S(d.k);
    d.t_bar = t_bar(d.k);
  }
  if (neg) {
    d.k = -d.k;
    d.S = -d.S;
  }
  return d;
}

// --- derived constants -----------------------------------------------------

DerivedConstants derived_constants(const ModelParams& p) {
  DerivedConstants c;
  c.alpha = (1.0 + p.beta2) / p.beta3;
  c.c_alpha = c_alpha(c.alpha);
  auto omega_prime = [&](double k) {
    if (p.omega_prime) return p.omega_prime(k);
    const double h = std::min(1e-6, 1e-4 * std::abs(k));
    return (p.omega_bar(k + h) - p.omega_bar(k - h)) / (2.0 * h);
  };
  auto S = [&](double k) { return omega_prime(k) / (p.gamma * p.R1(k)); };
  auto S_prime = [&](double k) {
    if (p.S_prime) return p.S_prime(k);
    const double h = std::min(1e-6, 1e-4 * std::abs(k));
    return (S(k + h) - S(k - h)) / (2.0 * h);
  };

  auto ratio = [&](double k) {
    const double r1 = p.R1(k);
    return r1 > 0.0 ? p.R2(k) / r1 : std::numeric_limits<double>::infinity();
  };
  double rc = 0.0;
  try {
    rc = 2.0 * geometric_integral(ratio);
  } catch (const NumericError&) {
    rc = std::numeric_limits<double>::infinity();
  }
  c.R_cal = rc;
  c.theta_bar = p.gamma / rc;

  auto check = [](const LimitEstimate& e, const char* what) {
    if (!(e.spread <= 1e-4) || !std::isfinite(e.value))
      throw NumericError("LimitNotConverged",
                         std::string(what) + " spread " + std::to_string(e.spread));
    return e.value;
  };
  c.R1_star = check(limit_at_zero([&](double k) { return p.R1(k) / std::pow(k, p.beta1); }),
                    "R1*");
  c.R2_star = check(limit_at_zero([&](double k) { return p.R2(k) / std::pow(k, p.beta2); }),
                    "R2*");
  c.S_star = check(limit_at_zero([&](double k) { return std::pow(k, p.beta3) * std::abs(S(k)); }),
                   "S*");
  c.Sprime_star = check(
      limit_at_zero([&](double k) { return std::pow(k, 1.0 + p.beta3) * std::abs(S_prime(k)); }),
      "S'*");
  c.r_star = c.R2_star * std::pow(c.S_star, 1.0 + c.alpha) / c.Sprime_star;
  c.r_bar_star = c.r_star * std::tgamma(c.alpha + 1.0);
  c.gamma_bar = p.gamma * c.R2_star * std::pow(c.S_star, 1.0 + c.alpha) *
                std::tgamma(c.alpha + 1.0) / c.Sprime_star;
  // liminf (log 1/k)^kappa p0(k); the log-decay family converges slowly, so
  // report the value deep in the asymptotic range.
  {
    const double k = 1e-12;
    c.p_star = std::pow(std::log(1.0 / k), p.kappa) * p.p_zero(k);
    c.p_star_tilde = c.p_star * std::pow(p.beta3, p.kappa);
  }
  c.p_plus0 = p.p_plus(0.0);
  c.p_minus0 = p.p_minus(0.0);
  return c;
}

// --- table construction ----------------------------------------------------

namespace {

struct TableBuilder {
  const Model& m;
  const ModelParams& p;
  double alpha;
  double r_bar_star;  // 0 when unknown

  void frequency(ModelTables& t) const {
    constexpr std::size_t kFine = 1u << 18;
    const double dk = 0.5 / static_cast<double>(kFine);
    std::vector<double> H(kFine + 1, 0.0);
    CompensatedSum acc;
    for (std::size_t i = 0; i < kFine; ++i) {
      const double a = dk * static_cast<double>(i);
      acc.add(2.0 * gl_integrate<GL8>(p.R2, a, a + dk));
      H[i + 1] = acc.value();
    }
    const double total = H.back();
    for (double& h : H) h /= total;

    auto invert = [&](double u) -> double {
      if (u <= 0.0) return 0.0;
      if (u >= 1.0) return 0.5;
      const auto it = std::upper_bound(H.begin(), H.end(), u);
      std::size_t i = static_cast<std::size_t>(it - H.begin());
      i = std::clamp<std::size_t>(i, 1, kFine) - 1;
      const double a = dk * static_cast<double>(i);
      auto g = [&](double k) {
        return H[i] + 2.0 * gl_integrate<GL8>(p.R2, a, k) / total - u;
      };
      const double ga = g(a);
      const double gb = g(a + dk);
      if (ga >= 0.0) return a;
      if (gb <= 0.0) return a + dk;
      return find_root(g, a, a + dk, 1e-16);
    };

    const std::size_t cells = 1u << 16;
    const double ut = t.freq_u_tail;
    std::vector<double> kb(cells + 1), sb(cells + 1), tb(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j) {
      const double u = ut + (1.0 - ut) * static_cast<double>(j) / static_cast<double>(cells);
      const double k = invert(u);
      kb[j] = k;
      sb[j] = m.S(k);
      tb[j] = m.t_bar(k);
    }
    t.k_bulk = UniformTable(ut, 1.0, kb);
    t.S_bulk = UniformTable(ut, 1.0, sb);
    t.tb_bulk = UniformTable(ut, 1.0, tb);

    t.freq_tail_exp = 1.0 / (1.0 + p.beta2);
    const std::size_t tail_cells = 4096;
    const double tmax = std::pow(ut, t.freq_tail_exp);
    std::vector<double> kt(tail_cells + 1);
    for (std::size_t j = 0; j <= tail_cells; ++j) {
      const double tt = tmax * static_cast<double>(j) / static_cast<double>(tail_cells);
      kt[j] = invert(std::pow(tt, 1.0 / t.freq_tail_exp));
    }
    kt.back() = kb.front();
    t.k_tail = UniformTable(0.0, tmax, kt);
  }

  void jumps(ModelTables& t) const {
    // k-quadrature nodes shared by every w.
    std::vector<double> ks, ws;
    double hi = 0.5;
    for (int j = 0; j < kGeomLevels; ++j) {
      const double lo = hi * 0.5;
      gl_nodes<GL20>(lo, hi, ks, ws);
      hi = lo;
    }
    std::vector<double> weight(ks.size()), inv_s(ks.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double s = m.S(ks[i]);
      weight[i] = ws[i] * p.R2(ks[i]);
      inv_s[i] = (s > 0.0 && std::isfinite(s)) ? 1.0 / s : -1.0;
      mass += weight[i];
    }
    mass *= 2.0;

    const std::size_t L = 4097;
    t.log_w_min = std::log(1e-14);
    t.log_w_max = std::log(1e10);
    const double dlw = (t.log_w_max - t.log_w_min) / static_cast<double>(L - 1);
    std::vector<double> lw(L), lT(L), lr(L), rb(L);
    for (std::size_t n = 0; n < L; ++n) {
      lw[n] = t.log_w_min + dlw * static_cast<double>(n);
      const double w = std::exp(lw[n]);
      double T = 0.0, r = 0.0;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        if (inv_s[i] < 0.0) continue;
        const double e = weight[i] * std::exp(-w * inv_s[i]);
        T += e;
        r += e * inv_s[i];
      }
      T = 2.0 * T / mass;
      r = r / mass;
      lT[n] = std::log(std::max(T, 1e-300));
      rb[n] = r;
      lr[n] = std::log(std::max(r, 1e-300));
    }
    t.log_survival = UniformTable(t.log_w_min, t.log_w_max, lT);
    t.log_rbar = UniformTable(t.log_w_min, t.log_w_max, lr);
    const double wmax = std::exp(t.log_w_max);
    t.x_tail_const = std::exp(lT.back()) * std::pow(wmax, alpha);

    // Survival inversion on the log grid.
    auto w_of_U = [&](double U) -> double {
      if (U >= std::exp(lT.front())) {
        const double T0 = std::exp(lT.front());
        return std::exp(lw.front()) * (1.0 - U) / std::max(1.0 - T0, 1e-300);
      }
      const double lu = std::log(U);
      if (lu <= lT.back()) return std::pow(t.x_tail_const / U, 1.0 / alpha);
      // lT is decreasing.
      std::size_t lo = 0, hi2 = L - 1;
      while (hi2 - lo > 1) {
        const std::size_t mid = (lo + hi2) / 2;
        if (lT[mid] >= lu)
          lo = mid;
        else
          hi2 = mid;
      }
      const double f = (lu - lT[lo]) / (lT[hi2] - lT[lo]);
      return std::exp(lw[lo] + f * (lw[hi2] - lw[lo]));
    };
    const std::size_t cells = 1u << 16;
    std::vector<double> xb(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j) {
      const double U = t.x_u_split + (1.0 - t.x_u_split) * static_cast<double>(j) /
                                         static_cast<double>(cells);
      xb[j] = w_of_U(U);
    }
    xb.back() = 0.0;
    t.x_bulk = UniformTable(t.x_u_split, 1.0, xb);
    const std::size_t tcells = 4096;
    const double s0 = -std::log(t.x_u_split), s1 = -std::log(t.x_u_min);
    std::vector<double> xt(tcells + 1);
    for (std::size_t j = 0; j <= tcells; ++j) {
      const double s = s0 + (s1 - s0) * static_cast<double>(j) / static_cast<double>(tcells);
      xt[j] = std::log(w_of_U(std::exp(-s)));
    }
    t.x_tail_log = UniformTable(s0, s1, xt);

    // Second moment, cumulative in log w.
    std::vector<double> m2(L);
    m2[0] = std::exp(3.0 * lw[0]) * rb[0] / 3.0;
    for (std::size_t n = 1; n < L; ++n) {
      const double f0 = std::exp(3.0 * lw[n - 1]) * rb[n - 1];
      const double f1 = std::exp(3.0 * lw[n]) * rb[n];
      m2[n] = m2[n - 1] + 0.5 * dlw * (f0 + f1);
    }
    t.m2 = UniformTable(t.log_w_min, t.log_w_max, m2);
    t.m2_tail_slope = rb.back() * std::pow(wmax, 1.0 + alpha) / (2.0 - alpha);

    // Interface probabilities as functions of the jump size.
    std::vector<double> pz(L), pp(L), pm(L);
    const double s_half = m.S(0.5);
    for (std::size_t n = 0; n < L; ++n) {
      const double w = std::exp(lw[n]);
      const double k = (w <= s_half) ? 0.5 : m.S_inverse(w);
      pz[n] = p.p_zero(k);
      pp[n] = p.p_plus(k);
      pm[n] = p.p_minus(k);
    }
    t.pt_zero = UniformTable(t.log_w_min, t.log_w_max, pz);
    t.pt_plus = UniformTable(t.log_w_min, t.log_w_max, pp);
    t.pt_minus = UniformTable(t.log_w_min, t.log_w_max, pm);

    std::vector<double> kt(L);
    kt[L - 1] = pz.back() * rb.back() * wmax / alpha;
    for (std::size_t n = L - 1; n-- > 0;) {
      const double f0 = pz[n] * rb[n] * std::exp(lw[n]);
      const double f1 = pz[n + 1] * rb[n + 1] * std::exp(lw[n + 1]);
      kt[n] = kt[n + 1] + 0.5 * dlw * (f0 + f1);
    }
    t.kill_tail = UniformTable(t.log_w_min, t.log_w_max, kt);
  }
};

}  // namespace

Model Model::build(ModelParams p) {
  if (!p.omega_bar || !p.R1 || !p.R2 || !p.p_plus || !p.p_minus || !p.p_zero)
    throw std::invalid_argument("Model::build: missing function handle");
  Model m;
  m.p_ = std::move(p);
  try {
    m.c_ = derived_constants(m.p_);
  } catch (const NumericError&) {
    m.c_ = DerivedConstants{};
    m.c_.alpha = (1.0 + m.p_.beta2) / m.p_.beta3;
    m.c_.c_alpha = c_alpha(m.c_.alpha);
    m.c_.p_plus0 = m.p_.p_plus(0.0);
    m.c_.p_minus0 = m.p_.p_minus(0.0);
  }
  auto t = std::make_shared<ModelTables>();
  TableBuilder b{m, m.p_, m.c_.alpha, m.c_.r_bar_star};
  b.frequency(*t);
  b.jumps(*t);
  m.t_ = std::move(t);
  return m;
}

// --- validation ------------------------------------------------------------

std::variant<ValidatedModel, ValidationReport> validate_params(const ModelParams& p) {
  ValidationReport rep;
  auto issue = [&](const char* kind, std::string detail, double k = 0.0) {
    rep.issues.push_back({kind, std::move(detail), k});
  };
  if (!p.omega_bar || !p.R1 || !p.R2 || !p.p_plus || !p.p_minus || !p.p_zero) {
    issue("ProbabilityDefect", "missing function handle");
    return rep;
  }
  if (!(p.gamma > 0.0)) issue("RangeError", "gamma must be positive");
  if (!(p.T_o >= 0.0)) issue("RangeError", "T_o must be >= 0");
  if (!(p.kappa > 0.0)) issue("RangeError", "kappa must be positive");

  const double alpha = (1.0 + p.beta2) / p.beta3;
  if (!(p.beta1 > 0 && p.beta2 > 0 && p.beta3 > 0))
    issue("AlphaOutOfRange", "exponents beta1, beta2, beta3 must be positive");
  if (!(alpha > 1.0 && alpha < 2.0))
    issue("AlphaOutOfRange", "alpha = (1+beta2)/beta3 = " + std::to_string(alpha));
  if (!(p.beta1 < 1.0 + p.beta2))
    issue("AlphaOutOfRange", "beta1 >= 1 + beta2");

  // Probability closure, range and evenness on 10^4 points.
  constexpr int kProbGrid = 10000;
  double inf_plus = 1.0;
  double inf_plus_k = 0.0;
  for (int i = 0; i <= kProbGrid; ++i) {
    const double k = -0.5 + static_cast<double>(i) / kProbGrid;
    const double pp = p.p_plus(k), pm = p.p_minus(k), pz = p.p_zero(k);
    if (std::abs(pp + pm + pz - 1.0) > 1e-12) {
      issue("ProbabilityDefect", "p+ + p- + p0 != 1", k);
      break;
    }
    if (pp < 0 || pm < 0 || pz < 0 || pp > 1 || pm > 1 || pz > 1) {
      issue("ProbabilityDefect", "probability outside [0,1]", k);
      break;
    }
    if (std::abs(pp - p.p_plus(-k)) > 1e-12 || std::abs(pz - p.p_zero(-k)) > 1e-12) {
      issue("ProbabilityDefect", "interface probabilities not even", k);
      break;
    }
    if (pp < inf_plus) {
      inf_plus = pp;
      inf_plus_k = k;
    }
  }
  if (!(inf_plus > 0.0)) issue("ProbabilityDefect", "inf p+ = 0", inf_plus_k);

  // Dispersion: even, strictly increasing on (0, 1/2).
  constexpr int kGrid = 4096;
  for (int i = 1; i <= kGrid; ++i) {
    const double k0 = 0.5 * (i - 1) / kGrid, k1 = 0.5 * i / kGrid;
    if (!(p.omega_bar(k1) > p.omega_bar(k0))) {
      issue("NonUnimodalDispersion", "omega not increasing on (0,1/2)", k1);
      break;
    }
    if (std::abs(p.omega_bar(k1) - p.omega_bar(-k1)) > 1e-12) {
      issue("NonUnimodalDispersion", "omega not even", k1);
      break;
    }
  }

  // Densities: nonnegative, even, unit mass.
  for (int j = 1; j <= 2; ++j) {
    const KFn& R = j == 1 ? p.R1 : p.R2;
    bool bad = false;
    for (int i = 0; i <= kGrid && !bad; ++i) {
      const double k = -0.5 + static_cast<double>(i) / kGrid;
      if (R(k) < 0.0 || std::abs(R(k) - R(-k)) > 1e-12) {
        issue("ProbabilityDefect", "R" + std::to_string(j) + " negative or not even", k);
        bad = true;
      }
    }
    double mass = 0.0;
    try {
      mass = 2.0 * geometric_integral(R);
    } catch (const NumericError&) {
      mass = std::numeric_limits<double>::quiet_NaN();
    }
    if (!(std::abs(mass - 1.0) <= 1e-8))
      issue("ProbabilityDefect", "integral of R" + std::to_string(j) + " = " + std::to_string(mass));
  }

  // S strictly decreasing on (0, 1/2].
  {
    auto omega_prime = [&](double k) {
      if (p.omega_prime) return p.omega_prime(k);
      const double h = std::min(1e-6, 1e-4 * std::abs(k));
      return (p.omega_bar(k + h) - p.omega_bar(k - h)) / (2.0 * h);
    };
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= kGrid; ++i) {
      const double k = 0.5 * i / kGrid;
      const double s = omega_prime(k) / (p.gamma * p.R1(k));
      if (!(s < prev)) {
        issue("NonMonotoneS", "S not strictly decreasing", k);
        break;
      }
      prev = s;
    }
  }

  DerivedConstants dc;
  try {
    dc = derived_constants(p);
    if (!(std::isfinite(dc.R_cal) && dc.R_cal > 0.0 && dc.R_cal < 1e12))
      issue("DivergentRcal", "R_cal = " + std::to_string(dc.R_cal));
    if (!(dc.R1_star > 0 && dc.R2_star > 0 && dc.S_star > 0 && dc.Sprime_star > 0))
      issue("LimitNotConverged", "vanishing limit constant");
    if (!(dc.p_star > 1e-10 && dc.p_star < 1e10))
      issue("ProbabilityDefect", "p_* not in (0, inf)");
  } catch (const NumericError& e) {
    issue(e.kind() == "LimitNotConverged" ? "LimitNotConverged" : "DivergentRcal", e.what());
  }
  if (!rep.ok()) return rep;
  return ValidatedModel(Model::build(p));
}

const ValidatedModel& default_model() {
  static const ValidatedModel m = [] {
    auto r = validate_params(default_params());
    if (auto* v = std::get_if<ValidatedModel>(&r)) return *v;
    throw std::runtime_error("default model failed validation: " +
                             std::get<ValidationReport>(r).to_json());
  }();
  return m;
}

}  // namespace kinstab
