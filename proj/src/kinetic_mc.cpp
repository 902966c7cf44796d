#include "kinstab/kinetic_mc.hpp"

#include <algorithm>
#include <cmath>

namespace kinstab {

namespace {

// sigma in {+1, -1, 0} with probabilities p+(k), p-(k), p0(k).
int draw_sigma(Rng& rng, const Model& m, double k) {
  const double u = rng.uniform();
  const double pp = m.p_plus(k);
  if (u < pp) return 1;
  if (u < pp + m.p_minus(k)) return -1;
  return 0;
}

void check_steps(std::uint64_t steps) {
  if (steps >= kMaxPathSteps)
    throw NumericError("PathBudgetExceeded",
                       "trajectory exceeded " + std::to_string(kMaxPathSteps) + " steps");
}

}  // namespace

FrequencyChain sample_chain(Rng& rng, const Model& m, double k0, std::size_t n) {
  FrequencyChain c;
  c.k0 = k0;
  c.states.reserve(n);
  c.taus.reserve(n);
  c.S.reserve(n);
  c.t_bar.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == 0) {
      c.states.push_back(k0);
      c.S.push_back(m.S(k0));
      c.t_bar.push_back(m.t_bar(k0));
    } else {
      const auto d = m.sample_frequency(rng);
      c.states.push_back(d.k);
      c.S.push_back(d.S);
      c.t_bar.push_back(d.t_bar);
    }
    c.taus.push_back(rng.exponential());
  }
  return c;
}

PathSample build_path(const Model& m, const FrequencyChain& chain, double y, double lambda) {
  PathSample p;
  p.lambda = lambda;
  p.y = y;
  const double sc = std::pow(lambda, -1.0 / m.alpha());
  const std::size_t n = chain.states.size();
  p.jump_times.resize(n + 1);
  p.positions.resize(n + 1);
  p.freqs = chain.states;
  p.jump_times[0] = 0.0;
  p.positions[0] = y;
  CompensatedSum T, X;
  for (std::size_t j = 0; j < n; ++j) {
    T.add(chain.t_bar[j] * chain.taus[j]);
    X.add(chain.S[j] * chain.taus[j]);
    p.jump_times[j + 1] = T.value() / lambda;
    p.positions[j + 1] = y - sc * X.value();
  }
  // n_{m+1} = first n > n_m with (-1)^m y Z_n <= 0
  double side = y > 0 ? 1.0 : -1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (side * p.positions[i] <= 0.0) {
      const double z0 = p.positions[i - 1], z1 = p.positions[i];
      const double f = z0 / (z0 - z1);
      p.crossing_index.push_back(i);
      p.crossing_times.push_back(p.jump_times[i - 1] + f * (p.jump_times[i] - p.jump_times[i - 1]));
      side = -side;
    }
  }
  return p;
}

void apply_interface(Rng& rng, const Model& m, PathSample& path) {
  path.signs.clear();
  path.absorbed_at.reset();
  path.absorbed_crossing.reset();
  for (std::size_t c = 0; c < path.crossing_index.size(); ++c) {
    const int s = draw_sigma(rng, m, path.freqs[path.crossing_index[c] - 1]);
    path.signs.push_back(s);
    if (s == 0) {
      path.absorbed_at = path.crossing_times[c];
      path.absorbed_crossing = c;
      break;
    }
  }
}

double PathSample::free_position_at(double t) const {
  if (t <= 0.0) return positions.front();
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.end()) return positions.back();
  const auto i = static_cast<std::size_t>(it - jump_times.begin());
  const double f = (t - jump_times[i - 1]) / (jump_times[i] - jump_times[i - 1]);
  return positions[i - 1] + f * (positions[i] - positions[i - 1]);
}

int PathSample::sign_at(double t) const {
  int s = 1;
  for (std::size_t c = 0; c < signs.size() && crossing_times[c] <= t; ++c) s *= signs[c];
  return s;
}

double PathSample::position_at(double t) const {
  if (absorbed_at && t >= *absorbed_at) return 0.0;
  return sign_at(t) * free_position_at(t);
}

double PathSample::frequency_at(double t) const {
  if (absorbed_at && t >= *absorbed_at) return 0.0;
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  auto i = static_cast<std::size_t>(it - jump_times.begin());
  i = std::min(i == 0 ? 0 : i - 1, freqs.size() - 1);
  return sign_at(t) * freqs[i];
}

KineticDraw sample_Y_o(Rng& chain_rng, Rng& iface_rng, const Model& m, double lambda, double t,
                       double y, double k) {
  KineticDraw out;
  out.k = k;
  if (t <= 0.0) {
    out.position = y;
    return out;
  }
  const double sc = std::pow(lambda, -1.0 / m.alpha());
  const double horizon = lambda * t;
  double T = 0.0, z = y;
  double kk = k, Sk = m.S(k), tb = m.t_bar(k);
  double side = y > 0 ? 1.0 : -1.0;
  int sign = 1;
  for (;;) {
    const double tau = chain_rng.exponential();
    const double Tn = T + tb * tau;
    const double zn = z - sc * Sk * tau;
    ++out.steps;
    if (side * zn <= 0.0) {
      const double tc = T + (z / (z - zn)) * (Tn - T);
      if (tc <= horizon) {
        const int s = draw_sigma(iface_rng, m, kk);
        ++out.crossings;
        if (s == 0) {
          out.absorbed = true;
          out.position = 0.0;
          out.k = 0.0;
          return out;
        }
        sign *= s;
        side = -side;
      }
    }
    if (Tn >= horizon) {
      const double f = (horizon - T) / (Tn - T);
      out.position = sign * (z + f * (zn - z));
      out.k = sign * kk;
      return out;
    }
    check_steps(out.steps);
    T = Tn;
    z = zn;
    const auto d = m.sample_frequency(chain_rng);
    kk = d.k;
    Sk = d.S;
    tb = d.t_bar;
  }
}

std::vector<KineticDraw> sample_Y_o_batch(const Model& m, double lambda, double t, double y,
                                          double k, std::size_t n, std::uint64_t seed,
                                          std::uint64_t first_index) {
  std::vector<KineticDraw> out(n);
  parallel_for(n, [&](std::size_t i) {
    Rng cr = sample_rng(seed, Stream::kKinetic, first_index + i);
    Rng ir = sample_rng(seed, Stream::kInterface, first_index + i);
    out[i] = sample_Y_o(cr, ir, m, lambda, t, y, k);
  });
  return out;
}

std::vector<MeanStderr> estimate_W(const Model& m, double lambda, const PhaseFn& W0, double t,
                                   const std::vector<PhasePoint>& points, std::size_t N,
                                   std::uint64_t seed) {
  std::vector<MeanStderr> out;
  out.reserve(points.size());
  const double T_o = m.params().T_o;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<double> vals(N);
    // each point gets its own block of sample indices
    const std::uint64_t base = static_cast<std::uint64_t>(p) << 40;
    parallel_for(N, [&](std::size_t i) {
      Rng cr = sample_rng(seed, Stream::kKinetic, base + i);
      Rng ir = sample_rng(seed, Stream::kInterface, base + i);
      const auto d = sample_Y_o(cr, ir, m, lambda, t, points[p].y, points[p].k);
      vals[i] = d.absorbed ? T_o : W0(d.position, d.k);
    });
    out.push_back(mean_stderr(vals));
  }
  return out;
}

double clock_lln_gap(Rng& rng, const Model& m, double lambda, double t_star, double k) {
  if (t_star <= 0.0) return 0.0;
  const double theta = m.constants().theta_bar;
  const double horizon = lambda * t_star;
  double T = 0.0, P = 0.0, tb = m.t_bar(k);
  double gap = 0.0;
  std::uint64_t steps = 0;
  // S_lambda is linear between renewal nodes, so the sup sits at a node or at t_star.
  for (;;) {
    const double Tn = T + tb * rng.exponential();
    const double e = rng.exponential();
    if (Tn >= horizon) {
      const double f = (horizon - T) / (Tn - T);
      gap = std::max(gap, std::abs((P + f * e) / lambda - theta * t_star));
      return gap;
    }
    P += e;
    T = Tn;
    gap = std::max(gap, std::abs(P - theta * T) / lambda);
    check_steps(++steps);
    tb = m.sample_frequency(rng).t_bar;
  }
}

CrossingEstimate first_crossing_vs_bound(const Model& m, double lambda, double y, double k,
                                         std::size_t N, std::uint64_t seed) {
  const double sc = std::pow(lambda, -1.0 / m.alpha());
  const double Sk = m.S(k);
  std::vector<unsigned char> hit(N);
  parallel_for(N, [&](std::size_t i) {
    Rng r = sample_rng(seed, Stream::kChain, i);
    const double z1 = y - sc * Sk * r.exponential();
    hit[i] = y * z1 < 0.0;
  });
  std::size_t c = 0;
  for (auto h : hit) c += h;
  CrossingEstimate e;
  e.p_hat = static_cast<double>(c) / static_cast<double>(N);
  e.stderr_ = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(N));
  e.bound = Sk == 0.0 ? 0.0 : std::exp(-std::abs(y) / (sc * std::abs(Sk)));
  return e;
}

}  // namespace kinstab
