#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinstab/config.hpp"
#include "kinstab/forms.hpp"
#include "kinstab/kinetic_mc.hpp"
#include "kinstab/levy_limit.hpp"
#include "kinstab/model.hpp"
#include "kinstab/report.hpp"
#include "kinstab/solver.hpp"

using namespace kinstab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitBudget = 3;

struct Common {
  std::string config_path;
  std::string out;
  std::string format;
  long long seed = -1;
};

struct Loaded {
  ExperimentConfig cfg;
  std::string text;
  std::string hash;
};

Loaded load(const Common& c) {
  Loaded l;
  if (c.config_path.empty()) {
    l.text = serialize_config(ExperimentConfig{});
  } else {
    std::ifstream f(c.config_path, std::ios::binary);
    if (!f) throw ConfigError("SyntaxError", 0, "cannot read " + c.config_path);
    std::ostringstream s;
    s << f.rdbuf();
    l.text = s.str();
  }
  l.cfg = parse_config(l.text);
  if (c.seed >= 0) l.cfg.run.seed = static_cast<std::uint64_t>(c.seed);
  if (!c.format.empty()) l.cfg.output.format = c.format;
  l.hash = config_hash(l.text);
  return l;
}

// Validated model owned for the lifetime of a command.
struct ModelHolder {
  std::variant<ValidatedModel, ValidationReport> v;
  const Model& model() const { return std::get<ValidatedModel>(v).model(); }
};

class InvalidModel : public std::runtime_error {
 public:
  explicit InvalidModel(std::string json)
      : std::runtime_error("model failed validation"), json_(std::move(json)) {}
  const std::string& json() const noexcept { return json_; }

 private:
  std::string json_;
};

ModelHolder build_model(const ExperimentConfig& cfg) {
  ModelHolder h{validate_params(make_params(cfg.model))};
  if (auto* r = std::get_if<ValidationReport>(&h.v)) throw InvalidModel(r->to_json());
  return h;
}

ExperimentReport new_report(const std::string& sub, const Loaded& l) {
  ExperimentReport r;
  r.subcommand = sub;
  r.config_hash = l.hash;
  r.seed = l.cfg.run.seed;
  return r;
}

std::string out_path(const Common& c, const Loaded& l, const std::string& name) {
  if (!c.out.empty()) return c.out;
  return l.cfg.output.dir + "/" + name + (l.cfg.output.format == "jsonl" ? ".jsonl" : ".csv");
}

void finish(ExperimentReport& r, const Common& c, const Loaded& l, const std::string& name,
            std::chrono::steady_clock::time_point t0) {
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto path = out_path(c, l, name);
  write_report(r, path, l.cfg.output.format);
  std::fprintf(stderr, "%s: %zu rows -> %s (%.2f s)\n", r.subcommand.c_str(), r.rows.size(),
               path.c_str(), r.wall_time);
}

// Named test functions: tent[:c:w], bump[:c:w], xgauss[:c], zero.
std::function<double(double)> function_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(spec);
  while (std::getline(in, cur, ':')) parts.push_back(cur);
  if (parts.empty()) throw std::invalid_argument("empty function spec");
  auto num = [&](std::size_t i, double def) { return parts.size() > i ? std::stod(parts[i]) : def; };
  const std::string& name = parts[0];
  if (name == "zero") return [](double) { return 0.0; };
  if (name == "tent") {
    const double c = num(1, 0.0), w = num(2, 1.0);
    return [c, w](double y) { return std::max(0.0, 1.0 - std::abs(y - c) / w); };
  }
  if (name == "bump") {
    const double c = num(1, 3.0), w = num(2, 2.5);
    return [c, w](double y) {
      const double z = (y - c) / w;
      return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0;
    };
  }
  if (name == "xgauss") {
    const double c = num(1, 0.5);
    return [c](double y) { return y * std::exp(-(y - c) * (y - c)); };
  }
  throw std::invalid_argument("unknown function spec '" + spec + "'");
}

GridFunction grid_function(const std::string& fn, const GridSpec& g) {
  const auto f = function_spec(fn);
  return GridFunction::sample(f, g.start, g.stop, g.step());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinstab: kinetic limit of phonons with an interface"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", c.config_path, "config file (built-in defaults when omitted)");
    s->add_option("--out", c.out, "output file");
    s->add_option("--seed", c.seed, "seed override");
    s->add_option("--format", c.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  };

  auto* validate = app.add_subcommand("validate", "check the model block and print derived constants");
  add_common(validate);

  auto* kin = app.add_subcommand("simulate-kinetic", "draw Y°_lambda(t, y, k)");
  add_common(kin);
  double lambda = -1, t = -1, y = NAN, k = NAN;
  long long samples = -1;
  kin->add_option("--lambda", lambda);
  kin->add_option("--t", t);
  kin->add_option("--y", y);
  kin->add_option("--k", k);
  kin->add_option("--samples", samples);

  auto* levy = app.add_subcommand("simulate-levy", "draw the proxy or the limit process");
  add_common(levy);
  std::string mode = "hatz";
  double h_tol = 1e-4;
  levy->add_option("--mode", mode)->check(CLI::IsMember({"hatz", "zeta"}));
  levy->add_option("--lambda", lambda);
  levy->add_option("--t", t);
  levy->add_option("--y", y);
  levy->add_option("--samples", samples);
  levy->add_option("--h-tol", h_tol, "hitting tolerance for zeta");

  auto* diag = app.add_subcommand("diagnostics", "Levy symbol against its lower bounds");
  add_common(diag);
  std::string symbol_grid = "0.01:1000:200";
  bool theta_only = false;
  diag->add_option("--symbol-grid", symbol_grid, "xi grid start:stop:count (log spaced)");
  diag->add_flag("--theta-star", theta_only, "only report theta_*");
  diag->add_option("--lambda", lambda);

  auto* forms = app.add_subcommand("forms", "quadratic forms, Hardy ratios and s_m");
  add_common(forms);
  std::string op = "energy", grid = "-8:8:16385", fn = "tent:0:1";
  double beta = 1.5, p_plus = -1;
  int m_max = 50;
  forms->add_option("--op", op)->check(
      CLI::IsMember({"energy", "interface", "lambda", "hardy", "gamma", "smseq"}));
  forms->add_option("--grid", grid, "x grid start:stop:count");
  forms->add_option("--fn", fn, "tent[:c:w] | bump[:c:w] | xgauss[:c] | zero");
  forms->add_option("--beta", beta);
  forms->add_option("--p-plus", p_plus);
  forms->add_option("--m-max", m_max);

  auto* solve = app.add_subcommand("solve", "Monte Carlo weak solution of the limit equation");
  add_common(solve);
  std::string w0 = "xgauss:0.5", t_grid, x_grid;
  solve->add_option("--w0", w0, "initial data minus T_o, as a function spec");
  solve->add_option("--t-grid", t_grid);
  solve->add_option("--x-grid", x_grid);
  solve->add_option("--samples", samples);

  auto* compare = app.add_subcommand("compare", "kinetic vs limit distances");
  add_common(compare);
  std::string lambda_grid;
  compare->add_option("--lambda-grid", lambda_grid, "comma separated");
  compare->add_option("--samples", samples);
  std::size_t ref_samples = 20000;
  compare->add_option("--ref-samples", ref_samples, "draws of the limit reference");

  CLI11_PARSE(app, argc, argv);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    Loaded l = load(c);
    auto& run = l.cfg.run;
    if (lambda > 0) run.lambda = lambda;
    if (t >= 0) run.t = t;
    if (!std::isnan(y)) run.y = y;
    if (!std::isnan(k)) run.k = k;
    if (samples > 0) run.samples = static_cast<std::size_t>(samples);

    if (*validate) {
      ModelHolder h{validate_params(make_params(l.cfg.model))};
      if (auto* r = std::get_if<ValidationReport>(&h.v)) {
        std::cout << r->to_json() << "\n";
        if (!c.out.empty()) write_atomic(c.out, r->to_json() + "\n");
        return kExitInvalid;
      }
      const auto& d = h.model().constants();
      nlohmann::ordered_json j;
      j["config_hash"] = l.hash;
      j["valid"] = true;
      j["alpha"] = d.alpha;
      j["R_cal"] = d.R_cal;
      j["theta_bar"] = d.theta_bar;
      j["S_star"] = d.S_star;
      j["p_star"] = d.p_star;
      j["r_star"] = d.r_star;
      j["r_bar_star"] = d.r_bar_star;
      j["gamma_bar"] = d.gamma_bar;
      j["c_alpha"] = d.c_alpha;
      j["p_plus0"] = d.p_plus0;
      j["p_minus0"] = d.p_minus0;
      std::cout << j.dump(2) << "\n";
      if (!c.out.empty()) write_atomic(c.out, j.dump() + "\n");
      return kExitOk;
    }

    const ModelHolder mh = build_model(l.cfg);
    const Model& m = mh.model();

    if (*kin) {
      auto r = new_report("simulate-kinetic", l);
      r.params = {{"lambda", format_double(run.lambda)}, {"t", format_double(run.t)},
                  {"y", format_double(run.y)}, {"k", format_double(run.k)},
                  {"samples", std::to_string(run.samples)}};
      r.columns = {"sample_index", "position", "absorbed", "crossings"};
      const auto draws = sample_Y_o_batch(m, run.lambda, run.t, run.y, run.k, run.samples, run.seed);
      std::size_t absorbed = 0;
      for (std::size_t i = 0; i < draws.size(); ++i) {
        absorbed += draws[i].absorbed;
        r.add_row({static_cast<double>(i), draws[i].position, draws[i].absorbed ? 1.0 : 0.0,
                   static_cast<double>(draws[i].crossings)});
      }
      finish(r, c, l, "simulate-kinetic", t0);
      // experiment log with the full parameter echo
      nlohmann::ordered_json log;
      log["config_hash"] = l.hash;
      log["subcommand"] = "simulate-kinetic";
      log["seed"] = run.seed;
      log["config"] = serialize_config(l.cfg);
      for (const auto& [key, v] : r.params) log["params"][key] = v;
      log["absorbed_fraction"] = static_cast<double>(absorbed) / static_cast<double>(draws.size());
      write_atomic(out_path(c, l, "simulate-kinetic") + ".log.jsonl", log.dump() + "\n");
      return kExitOk;
    }

    if (*levy) {
      auto r = new_report("simulate-levy", l);
      r.params = {{"mode", mode}, {"lambda", format_double(run.lambda)}, {"t", format_double(run.t)},
                  {"y", format_double(run.y)}, {"samples", std::to_string(run.samples)}};
      LevySampler s;
      Stream stream = Stream::kHatZ;
      if (mode == "hatz") {
        s = hat_z_sampler(m, run.lambda);
      } else {
        auto cfg = limit_config(m);
        cfg.h = h_tol;
        s = zeta_sampler(cfg);
        stream = Stream::kZeta;
        r.params.push_back({"h_tol", format_double(h_tol)});
      }
      r.columns = {"sample_index", "position", "killed", "events"};
      const auto draws = sample_batch(s, run.t, run.y, run.samples, run.seed, stream);
      for (std::size_t i = 0; i < draws.size(); ++i)
        r.add_row({static_cast<double>(i), draws[i].position, draws[i].killed ? 1.0 : 0.0,
                   static_cast<double>(draws[i].events)});
      finish(r, c, l, "simulate-levy", t0);
      return kExitOk;
    }

    if (*diag) {
      auto r = new_report("diagnostics", l);
      const auto th = theta_star(m.alpha());
      r.params = {{"theta_star", format_double(th.value)}, {"theta_argmin", format_double(th.argmin)},
                  {"theta_refinement_change", format_double(th.refinement_change)}};
      if (theta_only) {
        r.columns = {"alpha", "theta_star", "argmin", "refinement_change"};
        r.add_row({m.alpha(), th.value, th.argmin, th.refinement_change});
      } else {
        const auto g = GridSpec::parse(symbol_grid);
        if (!(g.start > 0.0)) throw std::invalid_argument("symbol grid must be positive (log spaced)");
        r.params.push_back({"lambda", format_double(run.lambda)});
        r.columns = {"xi", "psi", "bound", "ratio"};
        const double edge = std::pow(run.lambda, 1.0 / m.alpha());
        for (std::size_t i = 0; i < g.count; ++i) {
          const double xi = g.count == 1 ? g.start
                                         : g.start * std::pow(g.stop / g.start, static_cast<double>(i) /
                                                                                 static_cast<double>(g.count - 1));
          const double psi = levy_symbol(m, run.lambda, xi);
          const double bound = th.value * (xi >= edge ? run.lambda : std::pow(xi, m.alpha()));
          r.add_row({xi, psi, bound, psi / bound});
        }
      }
      finish(r, c, l, "diagnostics", t0);
      return kExitOk;
    }

    if (*forms) {
      auto r = new_report("forms", l);
      const auto g = GridSpec::parse(grid);
      r.params = {{"op", op}, {"grid", g.str()}, {"fn", fn}};
      const auto& dc = m.constants();
      if (op == "energy") {
        const auto u = grid_function(fn, g);
        r.columns = {"beta", "value", "error_estimate", "band_correction"};
        const auto e = sobolev_energy(u, beta);
        r.add_row({beta, e.value, e.error_estimate, e.band_correction});
      } else if (op == "interface") {
        const auto u = grid_function(fn, g);
        const double pp = p_plus >= 0 ? p_plus : dc.p_plus0;
        const double pm = p_plus >= 0 ? 1.0 - p_plus : dc.p_minus0;
        r.columns = {"alpha", "p_plus", "p_minus", "value", "error_estimate"};
        const auto e = interface_energy(u, m.alpha(), pp, pm);
        r.add_row({m.alpha(), pp, pm, e.value, e.error_estimate});
      } else if (op == "lambda") {
        const auto u = grid_function(fn, g);
        r.columns = {"lambda", "value", "error_estimate", "limit", "rel_gap"};
        const double lim = limit_form(u, m).value;
        for (double lam : run.lambda_grid) {
          const auto e = lambda_form(u, m, lam);
          r.add_row({lam, e.value, e.error_estimate, lim, lim > 0 ? std::abs(e.value - lim) / lim : 0.0});
        }
      } else if (op == "hardy") {
        const auto u = grid_function(fn, g);
        r.columns = {"beta", "ratio", "numerator", "denominator"};
        for (int i = 0; i <= 6; ++i) {
          const double b = 1.2 + 0.1 * i;
          const auto h = hardy_ratio(u, b);
          r.add_row({b, h.ratio, h.numerator, h.denominator});
        }
      } else if (op == "gamma") {
        std::vector<GridFunction> fam = {grid_function("bump:3:2.5", g), grid_function("bump:-3:2.5", g),
                                         grid_function("bump:2.5:2", g)};
        const auto rep = gamma_harness(m, fam, run.lambda_grid, run.seed);
        r.params.push_back({"equiv_lower", format_double(rep.equiv_lower)});
        r.params.push_back({"equiv_upper", format_double(rep.equiv_upper)});
        r.columns = {"function", "lambda", "E_lambda", "E_limit", "rel_gap", "E_perturbed", "equiv_ratio"};
        for (const auto& row : rep.rows)
          r.add_row({static_cast<double>(row.function), row.lambda, row.E_lambda, row.E_limit,
                     row.rel_gap, row.E_perturbed, row.equiv_ratio});
      } else {  // smseq
        const double pp = p_plus >= 0 ? p_plus : dc.p_plus0;
        r.params.push_back({"p_plus", format_double(pp)});
        r.columns = {"m", "s_m"};
        const auto s = s_sequence(pp, m_max);
        for (std::size_t i = 0; i < s.size(); ++i) r.add_row({static_cast<double>(i + 1), s[i]});
      }
      finish(r, c, l, "forms-" + op, t0);
      return kExitOk;
    }

    if (*solve) {
      auto r = new_report("solve", l);
      const GridSpec tg = t_grid.empty() ? run.t_grid : GridSpec::parse(t_grid);
      const GridSpec xg = x_grid.empty() ? run.x_grid : GridSpec::parse(x_grid);
      const double T_o = l.cfg.model.T_o;
      const auto f0 = function_spec(w0);
      const auto W0 = [&](double v) { return T_o + f0(v); };
      SolverOptions so;
      so.T_o = T_o;
      so.T_inf = T_o;
      const auto field = solve_limit_mc(m, W0, tg.points(), xg.start, xg.step(), xg.count,
                                        run.samples, run.seed, so);
      std::vector<double> sweep;
      for (int i = 0; i <= 40; ++i) sweep.push_back(1.0 + 0.05 * i);
      const auto fit = fit_coefficient(field, m, default_test_bank(), sweep);
      std::size_t best = 0;
      for (std::size_t i = 1; i < sweep.size(); ++i)
        if (fit.sweep_residual[i] < fit.sweep_residual[best]) best = i;
      r.params = {{"w0", w0}, {"t_grid", tg.str()}, {"x_grid", xg.str()},
                  {"samples", std::to_string(run.samples)},
                  {"gamma_hat", format_double(fit.gamma_hat)},
                  {"sweep_minimizer", format_double(sweep[best])},
                  {"sweep_min_residual", format_double(fit.sweep_residual[best])},
                  {"candidate_gamma_bar", format_double(fit.gamma_bar)},
                  {"candidate_theta_rbar", format_double(fit.theta_rbar)},
                  {"predicted_theta_rbar_over_c_alpha", format_double(fit.predicted)}};
      r.columns = {"t", "y", "mean", "stderr"};
      for (std::size_t ti = 0; ti < field.t.size(); ++ti)
        for (std::size_t i = 0; i < field.nx; ++i)
          r.add_row({field.t[ti], field.x(i), field.mean[ti][i], field.stderr_[ti][i]});
      finish(r, c, l, "solve", t0);
      return kExitOk;
    }

    if (*compare) {
      auto r = new_report("compare", l);
      if (!lambda_grid.empty()) {
        run.lambda_grid.clear();
        std::istringstream in(lambda_grid);
        std::string tok;
        while (std::getline(in, tok, ',')) run.lambda_grid.push_back(std::stod(tok));
      }
      ComparisonOptions co;
      co.blocks = run.blocks;
      co.reference_samples = ref_samples;
      const auto rows = kinetic_vs_limit(m, run.lambda_grid, run.t, run.y, run.k, run.samples, run.seed, co);
      r.params = {{"t", format_double(run.t)}, {"y", format_double(run.y)}, {"k", format_double(run.k)},
                  {"samples_per_block", std::to_string(run.samples)}, {"blocks", std::to_string(co.blocks)},
                  {"lambda_ref", format_double(co.lambda_ref)},
                  {"reference_samples", std::to_string(co.reference_samples)}};
      r.columns = {"lambda", "ks", "wasserstein", "killed_fraction"};
      for (const auto& row : rows) r.add_row({row.lambda, row.ks_median, row.w1_median, row.killed_kinetic});
      finish(r, c, l, "compare", t0);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalid;
  } catch (const InvalidModel& e) {
    std::cerr << e.what() << "\n" << e.json() << "\n";
    return kExitInvalid;
  } catch (const NumericError& e) {
    std::cerr << e.what() << "\n";
    if (e.kind() == "PathBudgetExceeded") return kExitBudget;
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
