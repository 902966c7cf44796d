#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinstab {

class NumericError : public std::runtime_error {
 public:
  NumericError(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(const std::vector<double>& xs);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error, reduced in index order.
MeanStderr mean_stderr(const std::vector<double>& xs);

double median(std::vector<double> xs);

using Fn = std::function<double(double)>;

/// Adaptive Gauss-Kronrod on [a, b]; throws QuadratureFailure when the
/// error estimate stays above tol * max(1, |I|).
double integrate(const Fn& f, double a, double b, double tol = 1e-10,
                 double* err_out = nullptr);

/// Integral over [a, inf) for integrands with algebraic or exponential decay.
double integrate_to_inf(const Fn& f, double a, double tol = 1e-10);

/// Root of a sign-changing function by TOMS 748, to absolute width xtol.
double find_root(const Fn& f, double lo, double hi, double xtol = 1e-13);

/// Richardson-type extrapolation of a limit g(x) as x -> x_inf sampled on a
/// geometric grid. `values[i]` corresponds to parameter ratio^i; the leading
/// error is assumed to be a power law with unknown exponent (Aitken delta^2).
struct LimitEstimate {
  double value = 0.0;
  double spread = 0.0;  // relative disagreement of the last two estimates
};
LimitEstimate aitken_limit(const std::vector<double>& values);

/// Kolmogorov limiting survival function Q(x) = 2 sum (-1)^{j-1} e^{-2 j^2 x^2}.
double kolmogorov_q(double x);

/// Asymptotic two-sample KS p-value with the Stephens finite-size correction.
double ks_pvalue(double d, std::size_t n, std::size_t m);

}  // namespace kinstab
