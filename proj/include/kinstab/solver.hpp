#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kinstab/forms.hpp"
#include "kinstab/grid.hpp"
#include "kinstab/levy_limit.hpp"
#include "kinstab/model.hpp"

namespace kinstab {

/// Monte Carlo solution of the limit equation on a time x space grid.
struct WeakSolutionField {
  std::vector<double> t;
  double x0 = 0.0;  // first spatial node
  double hx = 1.0;  // spatial spacing
  std::size_t nx = 0;
  std::vector<std::vector<double>> mean;     // [time][space]
  std::vector<std::vector<double>> stderr_;  // [time][space]
  double T_o = 0.0;
  double T_inf = 0.0;
  double theta_bar = 1.0;

  double x(std::size_t i) const noexcept { return x0 + static_cast<double>(i) * hx; }
  GridFunction at(std::size_t ti) const { return GridFunction(x0, hx, mean[ti]); }
};

struct SolverOptions {
  double T_o = 0.0;
  double T_inf = 0.0;
  double h_tol = 1e-4;             // zeta° hitting tolerance
  double step_fraction = 1.0 / 64.0;
};

/// W(t, y) = E[W0(eta°(t, y))] with eta°(t) = zeta°(theta_bar t); killed paths
/// contribute T_o. x_grid is uniform: x0 + i hx, i < nx, and must contain 0.
/// Throws std::invalid_argument when W0(0) != T_o or W0 does not approach
/// T_inf far from the origin.
WeakSolutionField solve_limit_mc(const Model& m, const std::function<double(double)>& W0,
                                 const std::vector<double>& t_grid, double x0, double hx,
                                 std::size_t nx, std::size_t N, std::uint64_t seed,
                                 const SolverOptions& opt = {});

/// Test function F(s, y) with its time derivative.
struct TestFunction {
  std::function<double(double, double)> F;
  std::function<double(double, double)> dF;  // d/ds
};

/// Terms of the weak identity on [t_a, t_b]:
///   lhs = int F(t_a)(W(t_a) - T_o) - int F(t_b)(W(t_b) - T_o) + int int dF (W - T_o)
///   form = int E^[F(s), W(s) - T_o] ds
/// so that lhs = gamma * form for the right coefficient gamma.
struct WeakTerms {
  double lhs = 0.0;
  double form = 0.0;
  double scale = 0.0;  // largest absolute term, for normalization
};

WeakTerms weak_terms(const WeakSolutionField& field, const Model& m, const TestFunction& F,
                     std::size_t ia = 0, std::size_t ib = static_cast<std::size_t>(-1));

/// Normalized signed defect (lhs - gamma form) / scale. Throws GridMismatch
/// for an unusable window or a grid without the interface node.
double weak_residual(const WeakSolutionField& field, const Model& m, const TestFunction& F,
                     double gamma_candidate, std::size_t ia = 0,
                     std::size_t ib = static_cast<std::size_t>(-1));

struct CoefficientFit {
  double gamma_hat = 0.0;      // least squares over the bank
  double gamma_bar = 0.0;      // analytic candidate gamma r_bar_*
  double theta_rbar = 0.0;     // analytic candidate theta_bar r_bar_*
  double predicted = 0.0;      // theta_bar r_bar_* / c_alpha
  double max_residual = 0.0;   // max normalized residual at gamma_hat
  std::vector<double> sweep_gamma;
  std::vector<double> sweep_residual;  // RMS normalized residual over the bank
};

/// Least-squares coefficient over a bank of test functions plus a sweep.
CoefficientFit fit_coefficient(const WeakSolutionField& field, const Model& m,
                               const std::vector<TestFunction>& bank,
                               const std::vector<double>& sweep);

/// Default bank: time profiles times bumps away from the interface.
std::vector<TestFunction> default_test_bank();

struct ComparisonRow {
  double lambda = 0.0;
  double ks_median = 0.0;
  double w1_median = 0.0;
  double killed_kinetic = 0.0;
  std::vector<double> ks_blocks;
  std::vector<double> pairing_kinetic;  // E f_j(Y°)
  std::vector<double> pairing_limit;    // E f_j(eta°)
  std::vector<double> pairing_stderr;   // combined
};

struct ComparisonOptions {
  std::size_t blocks = 20;
  double lambda_ref = 1e6;
  std::size_t reference_samples = 20000;
};

/// Per-lambda distances between law Y°_lambda(t, y, k) and law eta°(t, y); the
/// reference uses the proxy at lambda_ref run for time theta_bar t.
std::vector<ComparisonRow> kinetic_vs_limit(const Model& m, const std::vector<double>& lambdas,
                                            double t, double y, double k, std::size_t N,
                                            std::uint64_t seed,
                                            const ComparisonOptions& opt = {});

}  // namespace kinstab
