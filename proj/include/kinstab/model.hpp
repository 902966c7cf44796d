#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kinstab/numerics.hpp"
#include "kinstab/rng.hpp"

namespace kinstab {

using KFn = std::function<double(double)>;

/// Model coefficients on the torus [-1/2, 1/2). All function handles are
/// evaluated at k in [-1/2, 1/2].
struct ModelParams {
  double gamma = 1.0;
  double T_o = 0.0;
  double kappa = 2.0;
  double beta1 = 2.0;
  double beta2 = 2.0;
  double beta3 = 2.0;
  KFn omega_bar;
  KFn omega_prime;  // optional; central differences when empty
  KFn S_prime;      // optional; central differences when empty
  KFn R1;
  KFn R2;
  KFn p_plus;
  KFn p_minus;
  KFn p_zero;
};

/// Named families used by the config layer and the default model.
struct FamilySpec {
  std::string omega = "abs_sin";     // abs_sin
  std::string R1 = "sin_power";      // sin_power (exponent beta1) | uniform
  std::string R2 = "sin_power";      // sin_power (exponent beta2) | uniform
  std::string p_zero = "log_decay";  // log_decay | constant
  double gamma = 1.0;
  double T_o = 0.0;
  double kappa = 2.0;
  double p_c = 2.5;              // log_decay amplitude or constant value
  double transmit_share = 0.7;   // p_plus = a (1 - p_zero)
  double beta1 = 2.0;
  double beta2 = 2.0;
  double beta3 = 2.0;
};

ModelParams make_params(const FamilySpec& spec);
ModelParams default_params();

/// Normalizing constant of |sin(pi k)|^beta over the torus.
double sin_power_norm(double beta);

struct KernelValues {
  double omega, omega_prime, R1, R2, t_bar, S, p_plus, p_minus, p_zero;
};

struct DerivedConstants {
  double alpha = 0.0;
  double R_cal = 0.0;
  double theta_bar = 0.0;
  double R1_star = 0.0;
  double R2_star = 0.0;
  double S_star = 0.0;
  double Sprime_star = 0.0;
  double p_star = 0.0;
  double p_star_tilde = 0.0;
  double r_star = 0.0;
  double r_bar_star = 0.0;
  double gamma_bar = 0.0;
  double c_alpha = 0.0;
  double p_plus0 = 0.0;   // p_plus(0), the limit transmission probability
  double p_minus0 = 0.0;
};

struct ValidationIssue {
  std::string kind;   // NonUnimodalDispersion, ProbabilityDefect, ...
  std::string detail;
  double k = 0.0;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
  std::string to_json() const;
};

/// Standard fractional-Laplacian normalization, positive on (1, 2).
double c_alpha(double alpha);

/// q_alpha(y) = c_alpha / |y|^(1+alpha).
double q_alpha(double alpha, double y);

/// Linear interpolation on a uniform grid; clamps outside.
class UniformTable {
 public:
  UniformTable() = default;
  UniformTable(double x0, double x1, std::vector<double> values);
  double operator()(double x) const noexcept {
    double s = (x - x0_) * inv_dx_;
    if (s <= 0.0) return v_.front();
    const double last = static_cast<double>(v_.size() - 1);
    if (s >= last) return v_.back();
    const auto i = static_cast<std::size_t>(s);
    const double f = s - static_cast<double>(i);
    return v_[i] + f * (v_[i + 1] - v_[i]);
  }
  double x0() const noexcept { return x0_; }
  double x1() const noexcept { return x1_; }
  const std::vector<double>& values() const noexcept { return v_; }

 private:
  double x0_ = 0.0, x1_ = 1.0, inv_dx_ = 1.0;
  std::vector<double> v_;
};


/// Everything heavy that depends only on the model: sampling tables for
/// K and X = S(K) tau, interface probabilities as functions of the jump
/// size, and the killing integral.
struct ModelTables {
  // |K| quantile of the half-torus CDF H(k) = 2 int_0^k R2. Bulk is uniform
  // in u on [freq_u_tail, 1] with 2^16 cells and carries S and t_bar at the
  // nodes; the tail is uniform in u^(1/(1+beta2)) so that the small-k power
  // law, which drives the heavy tail of S(K), is reproduced.
  double freq_u_tail = 1.0 / 1024.0;
  double freq_tail_exp = 1.0 / 3.0;
  UniformTable k_bulk, S_bulk, tb_bulk;
  UniformTable k_tail;
  // |X| quantile as a function of the survival level U = P(|X| > w).
  UniformTable x_bulk;      // U in [u_split, 1]
  UniformTable x_tail_log;  // log w vs s = -log U, U in [u_min, u_split]
  double x_u_split = 1e-3;
  double x_u_min = 1e-12;
  double x_tail_const = 0.0;  // P(|X|>w) ~ x_tail_const * w^-alpha
  // Functions of log w on [log_w_min, log_w_max].
  double log_w_min = 0.0, log_w_max = 0.0;
  UniformTable log_survival;  // log P(|X| > w)
  UniformTable log_rbar;      // log rbar(w)
  UniformTable m2;            // int_0^w v^2 rbar(v) dv
  UniformTable kill_tail;     // int_w^inf p0~(v) rbar(v) dv
  UniformTable pt_zero;       // p0(S^-1(w))
  UniformTable pt_plus;       // p+(S^-1(w))
  UniformTable pt_minus;
  double m2_tail_slope = 0.0;  // m2(w) ~ m2_tail_slope * w^(2-alpha) beyond table
};

class Model {
 public:
  /// Builds tables without checking the standing hypotheses. Used for
  /// degenerate test models (p0 == 1, p_plus == 0, ...). Limits that do not
  /// exist for such models are left at zero.
  static Model build(ModelParams p);

  const ModelParams& params() const noexcept { return p_; }
  const DerivedConstants& constants() const noexcept { return c_; }
  const ModelTables& tables() const noexcept { return *t_; }
  double alpha() const noexcept { return c_.alpha; }

  KernelValues kernel(double k) const;
  double omega_prime(double k) const;
  double t_bar(double k) const;
  double S(double k) const;
  double S_prime(double k) const;
  /// k in (0, 1/2] with S(k) = w, w > 0. Bisection to 1e-12.
  double S_inverse(double w) const;

  double p_plus(double k) const { return p_.p_plus(k); }
  double p_minus(double k) const { return p_.p_minus(k); }
  double p_zero(double k) const { return p_.p_zero(k); }

  /// Density of S(K1).
  double s_density(double y) const;
  /// Density of X = S(K) tau, by quadrature over k.
  double bar_r(double y) const;
  double bar_r_lambda(double lambda, double y) const;
  /// P(|X| > w) by quadrature.
  double x_survival(double w) const;

  // Table-backed fast versions (w = |X| scale, not rescaled).
  double fast_survival(double w) const noexcept;
  double fast_bar_r(double w) const noexcept;
  double fast_m2(double w) const noexcept;
  double fast_kill_tail(double w) const noexcept;
  double pt_zero(double w) const noexcept;
  double pt_plus(double w) const noexcept;
  double pt_minus(double w) const noexcept;
  /// Killing rate k_lambda(y) = lambda * kill_tail(lambda^(1/alpha) |y|).
  double kill_rate(double lambda, double y) const noexcept;

  /// |X| from a survival level U in (0, 1].
  double x_from_survival(double U) const noexcept;
  /// One draw of X (signed).
  double sample_x(Rng& rng) const noexcept {
    const std::uint64_t bits = rng.next();
    const double U = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    const double w = x_from_survival(U);
    return (bits & 1u) ? w : -w;
  }

  struct FreqDraw {
    double k, S, t_bar;
  };
  /// K from R2 together with S(K) and t_bar(K).
  FreqDraw sample_frequency(Rng& rng) const noexcept;
  /// |K| quantile of the half-torus CDF.
  double abs_k_quantile(double u) const noexcept;

 private:
  friend class ValidatedModel;
  ModelParams p_;
  DerivedConstants c_;
  std::shared_ptr<const ModelTables> t_;
};

/// A model that passed every standing hypothesis.
class ValidatedModel {
 public:
  const Model& model() const noexcept { return m_; }
  operator const Model&() const noexcept { return m_; }
  const DerivedConstants& constants() const noexcept { return m_.constants(); }

 private:
  friend std::variant<ValidatedModel, ValidationReport> validate_params(const ModelParams&);
  explicit ValidatedModel(Model m) : m_(std::move(m)) {}
  Model m_;
};

std::variant<ValidatedModel, ValidationReport> validate_params(const ModelParams& p);

/// Derived constants with extrapolated limits. Throws LimitNotConverged.
DerivedConstants derived_constants(const ModelParams& p);

/// Convenience: validated default model, throws on failure.
const ValidatedModel& default_model();

}  // namespace kinstab
