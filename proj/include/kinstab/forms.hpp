#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kinstab/grid.hpp"
#include "kinstab/model.hpp"

namespace kinstab {

struct FormReport {
  double value = 0.0;
  double error_estimate = 0.0;  // |E_h - E_{h/2}| when refined
  double h = 0.0;
  double band_correction = 0.0;  // near-diagonal moment correction included in value
  std::string band_treatment = "second-moment defect, 32 nodes per side";
};

struct FormOptions {
  bool refine = true;       // also evaluate on the h/2 grid
  double rel_tol = 0.05;    // QuadratureNotConverged above this relative error
  int band_nodes = 32;      // width of the near-diagonal band in nodes
};

/// Grid function on [-half_width, half_width] with spacing h (0 is a node).
GridFunction make_grid_function(const std::function<double(double)>& f, double half_width = 8.0,
                                double h = 1.0 / 1024.0);

/// Piecewise-linear refinement onto the h/2 grid.
GridFunction refine(const GridFunction& u);

/// 1/2 int int [u(y') - u(y)]^2 q_beta(y' - y) dy dy' (c_beta normalization).
FormReport sobolev_energy(const GridFunction& u, double beta, const FormOptions& opt = {});

/// Same energy for the piecewise-linear interpolant of u, evaluated exactly
/// in the hat basis. Cost grows with the square of the support size.
double sobolev_energy_exact(const GridFunction& u, double beta);

/// Interface form with kernel q_alpha: same side weight 1, transmitted
/// cross-side weight p_plus, reflected weight p_minus.
FormReport interface_energy(const GridFunction& u, double alpha, double p_plus, double p_minus,
                            const FormOptions& opt = {});
/// Bilinear version by polarization.
FormReport interface_form(const GridFunction& u, const GridFunction& v, double alpha,
                          double p_plus, double p_minus, const FormOptions& opt = {});

/// Form of the killed proxy semigroup: kernel r^_lambda plus killing k_lambda.
FormReport lambda_form(const GridFunction& u, const Model& m, double lambda,
                       const FormOptions& opt = {});

/// Limit form E° = (r_bar_* / c_alpha) E^[u] with p_pm taken at k = 0.
FormReport limit_form(const GridFunction& u, const Model& m, const FormOptions& opt = {});

double l2_norm2(const GridFunction& u);

/// ||u||^2 in H^(beta/2): L2 part plus the c_beta-normalized energy.
double sobolev_norm2(const GridFunction& u, double beta);

struct HardyResult {
  double ratio = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};

/// (int u^2 / |y|^beta) / ||u||^2_{H^(beta/2)}. Throws DivergentNumerator when
/// the numerator grows under refinement (u(0) != 0).
HardyResult hardy_ratio(const GridFunction& u, double beta);

/// s_1 = p_plus, s_{m+1} = s_m p_plus + (1 - s_m) p_minus with p_minus = 1 - p_plus.
std::vector<double> s_sequence(double p_plus, int m_max);

/// Exact s_m * den^m for p_plus = num / den, by the recurrence and by
/// enumerating all sign sequences with product +1 (m <= 24).
std::vector<unsigned __int128> s_sequence_exact(int num, int den, int m_max);
std::vector<unsigned __int128> s_sequence_enumerated(int num, int den, int m_max);

/// min over the grid of k_lambda(y) (lambda^(-1/alpha) + |y|)^alpha
/// [1 + log(1 + lambda^(1/alpha)|y|)]^kappa.
double killing_bound_constant(const Model& m, double lambda, const std::vector<double>& ys);

struct GammaRow {
  std::size_t function = 0;
  double lambda = 0.0;
  double E_lambda = 0.0;
  double E_limit = 0.0;
  double rel_gap = 0.0;
  double E_perturbed = 0.0;  // E_lambda[u + lambda^(-1/(2 alpha)) noise]
  double equiv_ratio = 0.0;  // E^[u] / E[u]
};

struct GammaReport {
  std::vector<GammaRow> rows;
  double equiv_lower = 0.0;  // min(p_plus, 1/2)
  double equiv_upper = 0.0;  // 1 + p_minus
};

/// Recovery-side table with the trivial family and a perturbed liminf probe.
GammaReport gamma_harness(const Model& m, const std::vector<GridFunction>& family,
                          const std::vector<double>& lambdas, std::uint64_t seed);

}  // namespace kinstab
