#pragma once

#include <cstddef>
#include <vector>

namespace kinstab {

/// Weighted sample set on the real line. Samples are kept sorted; weights are
/// normalized to sum to one.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<double> samples);
  EmpiricalMeasure(std::vector<double> samples, std::vector<double> weights);

  /// Right-continuous CDF F(x) = mass of (-inf, x].
  double cdf(double x) const;
  double quantile(double p) const;
  std::size_t size() const noexcept { return x_.size(); }
  bool empty() const noexcept { return x_.empty(); }
  const std::vector<double>& samples() const noexcept { return x_; }
  const std::vector<double>& weights() const noexcept { return w_; }
  /// Effective sample size (sum w)^2 / sum w^2.
  double effective_size() const;

 private:
  std::vector<double> x_;
  std::vector<double> w_;
  std::vector<double> cum_;
};

/// sup |F - G| over the union of atoms.
double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// 1-Wasserstein distance, the integral of |F - G|.
double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Two-sample KS p-value using effective sizes.
double ks_test_pvalue(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace kinstab
