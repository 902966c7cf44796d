#include "kinstab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kinstab/empirical.hpp"
#include "kinstab/kinetic_mc.hpp"
#include "kinstab/numerics.hpp"
#include "kinstab/rng.hpp"

namespace kinstab {

namespace {

long zero_node(double x0, double hx, std::size_t nx) {
  const double s = -x0 / hx;
  const double r = std::round(s);
  if (std::abs(s - r) > 1e-9 || r < 0 || r >= static_cast<double>(nx)) return -1;
  return static_cast<long>(r);
}

}  // namespace

WeakSolutionField solve_limit_mc(const Model& m, const std::function<double(double)>& W0,
                                 const std::vector<double>& t_grid, double x0, double hx,
                                 std::size_t nx, std::size_t N, std::uint64_t seed,
                                 const SolverOptions& opt) {
  if (!(hx > 0.0) || nx == 0 || t_grid.empty())
    throw std::invalid_argument("solve_limit_mc: empty grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("solve_limit_mc: time grid must increase");
  if (std::abs(W0(0.0) - opt.T_o) > 1e-12)
    throw std::invalid_argument("solve_limit_mc: initial data must equal T_o at the interface");
  for (double far : {-1e4, 1e4})
    if (std::abs(W0(far) - opt.T_inf) > 1e-6)
      throw std::invalid_argument("solve_limit_mc: initial data does not approach T_inf");

  WeakSolutionField f;
  f.t = t_grid;
  f.x0 = x0;
  f.hx = hx;
  f.nx = nx;
  f.T_o = opt.T_o;
  f.T_inf = opt.T_inf;
  f.theta_bar = m.constants().theta_bar;
  const std::size_t nt = t_grid.size();
  f.mean.assign(nt, std::vector<double>(nx, opt.T_o));
  f.stderr_.assign(nt, std::vector<double>(nx, 0.0));

  StablePathConfig cfg = limit_config(m);
  cfg.h = opt.h_tol;
  cfg.step_fraction = opt.step_fraction;
  cfg.time_scale = f.theta_bar;

  const long i0 = zero_node(x0, hx, nx);
  for (std::size_t i = 0; i < nx; ++i) {
    const double y = f.x(i);
    if (static_cast<long>(i) == i0) continue;  // W(t, 0) = T_o
    std::vector<double> vals(N * nt);
    parallel_for(N, [&](std::size_t n) {
      Rng rng = sample_rng(seed, Stream::kSolver, (static_cast<std::uint64_t>(i) << 32) + n);
      const auto path = sample_zeta_o_path(rng, cfg, t_grid, y);
      for (std::size_t ti = 0; ti < nt; ++ti)
        vals[n * nt + ti] = std::isnan(path[ti]) ? opt.T_o : W0(path[ti]);
    });
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (t_grid[ti] <= 0.0) {
        f.mean[ti][i] = W0(y);
        continue;
      }
      std::vector<double> col(N);
      for (std::size_t n = 0; n < N; ++n) col[n] = vals[n * nt + ti];
      const auto ms = mean_stderr(col);
      f.mean[ti][i] = ms.mean;
      f.stderr_[ti][i] = ms.stderr_;
    }
  }
  return f;
}

WeakTerms weak_terms(const WeakSolutionField& field, const Model& m, const TestFunction& F,
                     std::size_t ia, std::size_t ib) {
  const std::size_t nt = field.t.size();
  if (ib == static_cast<std::size_t>(-1)) ib = nt - 1;
  if (nt < 2 || ia >= ib || ib >= nt)
    throw NumericError("GridMismatch", "time window outside the field's time grid");
  if (field.mean.size() != nt || field.mean[0].size() != field.nx)
    throw NumericError("GridMismatch", "field arrays do not match its grids");
  if (zero_node(field.x0, field.hx, field.nx) < 0)
    throw NumericError("GridMismatch", "spatial grid must contain the interface node");

  const auto& c = m.constants();
  FormOptions quick;
  quick.refine = false;
  const double hx = field.hx;

  auto pair = [&](std::size_t ti, const std::function<double(double, double)>& g) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < field.nx; ++i)
      acc.add(g(field.t[ti], field.x(i)) * (field.mean[ti][i] - field.T_o));
    return hx * acc.value();
  };
  auto form_at = [&](std::size_t ti) {
    std::vector<double> fv(field.nx), dv(field.nx);
    for (std::size_t i = 0; i < field.nx; ++i) {
      fv[i] = F.F(field.t[ti], field.x(i));
      dv[i] = field.mean[ti][i] - field.T_o;
    }
    return interface_form(GridFunction(field.x0, hx, fv), GridFunction(field.x0, hx, dv),
                          m.alpha(), c.p_plus0, c.p_minus0, quick)
        .value;
  };

  WeakTerms w;
  const double Aa = pair(ia, F.F);
  const double Ab = pair(ib, F.F);
  CompensatedSum dF, form;
  double prev_d = pair(ia, F.dF), prev_e = form_at(ia);
  for (std::size_t ti = ia + 1; ti <= ib; ++ti) {
    const double dt = field.t[ti] - field.t[ti - 1];
    const double cur_d = pair(ti, F.dF), cur_e = form_at(ti);
    dF.add(0.5 * dt * (prev_d + cur_d));
    form.add(0.5 * dt * (prev_e + cur_e));
    prev_d = cur_d;
    prev_e = cur_e;
  }
  w.lhs = Aa - Ab + dF.value();
  w.form = form.value();
  w.scale = std::max({std::abs(Aa), std::abs(Ab), std::abs(dF.value())});
  return w;
}

namespace {

double normalized(const WeakTerms& w, double gamma) {
  const double scale = std::max(w.scale, std::abs(gamma * w.form));
  return scale > 0.0 ? (w.lhs - gamma * w.form) / scale : 0.0;
}

}  // namespace

double weak_residual(const WeakSolutionField& field, const Model& m, const TestFunction& F,
                     double gamma_candidate, std::size_t ia, std::size_t ib) {
  return normalized(weak_terms(field, m, F, ia, ib), gamma_candidate);
}

CoefficientFit fit_coefficient(const WeakSolutionField& field, const Model& m,
                               const std::vector<TestFunction>& bank,
                               const std::vector<double>& sweep) {
  const auto& c = m.constants();
  std::vector<WeakTerms> terms;
  terms.reserve(bank.size());
  double ab = 0.0, bb = 0.0;
  for (const auto& F : bank) {
    terms.push_back(weak_terms(field, m, F));
    ab += terms.back().lhs * terms.back().form;
    bb += terms.back().form * terms.back().form;
  }
  CoefficientFit fit;
  fit.gamma_hat = bb > 0.0 ? ab / bb : 0.0;
  fit.gamma_bar = c.gamma_bar;
  fit.theta_rbar = c.theta_bar * c.r_bar_star;
  fit.predicted = fit.theta_rbar / c.c_alpha;
  for (const auto& w : terms)
    fit.max_residual = std::max(fit.max_residual, std::abs(normalized(w, fit.gamma_hat)));
  for (double g : sweep) {
    double s2 = 0.0;
    for (const auto& w : terms) s2 += normalized(w, g) * normalized(w, g);
    fit.sweep_gamma.push_back(g);
    fit.sweep_residual.push_back(terms.empty() ? 0.0 : std::sqrt(s2 / static_cast<double>(terms.size())));
  }
  return fit;
}

std::vector<TestFunction> default_test_bank() {
  auto bump = [](double c, double w) {
    return [c, w](double y) {
      const double z = (y - c) / w;
      return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0;
    };
  };
  std::vector<TestFunction> bank;
  const std::vector<std::pair<double, double>> spots = {
      {-2.0, 1.2}, {-1.0, 0.8}, {1.0, 0.8}, {2.0, 1.2}, {1.5, 1.3}};
  for (const auto& [cen, wid] : spots) {
    const auto psi = bump(cen, wid);
    bank.push_back({[psi](double s, double y) { return std::exp(-0.5 * s) * psi(y); },
                    [psi](double s, double y) { return -0.5 * std::exp(-0.5 * s) * psi(y); }});
  }
  return bank;
}

std::vector<ComparisonRow> kinetic_vs_limit(const Model& m, const std::vector<double>& lambdas,
                                            double t, double y, double k, std::size_t N,
                                            std::uint64_t seed, const ComparisonOptions& opt) {
  const double theta = m.constants().theta_bar;
  // eta°(t, y) = zeta°(theta_bar t, y), approximated by the proxy at lambda_ref
  const auto ref_draws = sample_batch(hat_z_sampler(m, opt.lambda_ref), theta * t, y,
                                      opt.reference_samples, seed, Stream::kHatZ);
  const EmpiricalMeasure ref = to_measure(ref_draws);

  const std::vector<std::function<double(double)>> probes = {
      [](double x) { return x * std::exp(-0.25 * x * x); },
      [](double x) { return x * x * std::exp(-0.5 * x * x); },
      [](double x) { return std::abs(x) / (1.0 + std::abs(x)); }};
  std::vector<MeanStderr> ref_pair;
  for (const auto& f : probes) {
    std::vector<double> v(ref_draws.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(ref_draws[i].position);
    ref_pair.push_back(mean_stderr(v));
  }

  std::vector<ComparisonRow> rows;
  for (double lambda : lambdas) {
    ComparisonRow row;
    row.lambda = lambda;
    std::vector<double> ks, w1, all;
    std::size_t killed = 0;
    for (std::size_t b = 0; b < opt.blocks; ++b) {
      const auto draws = sample_Y_o_batch(m, lambda, t, y, k, N, seed, b * N);
      std::vector<double> pos(draws.size());
      for (std::size_t i = 0; i < draws.size(); ++i) {
        pos[i] = draws[i].position;
        killed += draws[i].absorbed ? 1 : 0;
      }
      all.insert(all.end(), pos.begin(), pos.end());
      const EmpiricalMeasure e(std::move(pos));
      ks.push_back(ks_distance(e, ref));
      w1.push_back(wasserstein1(e, ref));
    }
    row.ks_blocks = ks;
    row.ks_median = median(ks);
    row.w1_median = median(w1);
    row.killed_kinetic = all.empty() ? 0.0 : static_cast<double>(killed) / static_cast<double>(all.size());
    for (std::size_t j = 0; j < probes.size(); ++j) {
      std::vector<double> v(all.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = probes[j](all[i]);
      const auto ms = mean_stderr(v);
      row.pairing_kinetic.push_back(ms.mean);
      row.pairing_limit.push_back(ref_pair[j].mean);
      row.pairing_stderr.push_back(std::hypot(ms.stderr_, ref_pair[j].stderr_));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace kinstab
