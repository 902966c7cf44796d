#include "kinstab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kinstab/numerics.hpp"

namespace kinstab {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples)
    : EmpiricalMeasure(samples, std::vector<double>(samples.size(), 1.0)) {}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples, std::vector<double> weights) {
  if (samples.size() != weights.size())
    throw std::invalid_argument("EmpiricalMeasure: size mismatch");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  // stable sort keeps tie order deterministic
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t i, std::size_t j) { return samples[i] < samples[j]; });
  x_.reserve(idx.size());
  w_.reserve(idx.size());
  CompensatedSum total;
  for (std::size_t i : idx) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("EmpiricalMeasure: weight <= 0");
    x_.push_back(samples[i]);
    w_.push_back(weights[i]);
    total.add(weights[i]);
  }
  const double t = total.value();
  cum_.resize(x_.size());
  CompensatedSum run;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    w_[i] /= t;
    run.add(w_[i]);
    cum_[i] = run.value();
  }
  if (!cum_.empty()) cum_.back() = 1.0;
}

double EmpiricalMeasure::cdf(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.begin()) return 0.0;
  return cum_[static_cast<std::size_t>(it - x_.begin()) - 1];
}

double EmpiricalMeasure::quantile(double p) const {
  if (x_.empty()) throw std::logic_error("quantile of empty measure");
  const auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
  if (it == cum_.end()) return x_.back();
  return x_[static_cast<std::size_t>(it - cum_.begin())];
}

double EmpiricalMeasure::effective_size() const {
  double s2 = 0.0;
  for (double w : w_) s2 += w * w;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

namespace {

// Walks both sorted atom lists and calls visit(x_prev, x_next, F, G) for each
// interval between consecutive atoms, with F, G the CDFs on that interval.
template <class Visit>
void merge_walk(const EmpiricalMeasure& a, const EmpiricalMeasure& b, Visit visit) {
  const auto& xa = a.samples();
  const auto& xb = b.samples();
  const auto& wa = a.weights();
  const auto& wb = b.weights();
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0;
  CompensatedSum ca, cb;
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      x = xa[i];
    else
      x = xb[j];
    while (i < xa.size() && xa[i] == x) ca.add(wa[i++]);
    while (j < xb.size() && xb[j] == x) cb.add(wb[j++]);
    fa = ca.value();
    fb = cb.value();
    double next;
    if (i < xa.size() && j < xb.size())
      next = std::min(xa[i], xb[j]);
    else if (i < xa.size())
      next = xa[i];
    else if (j < xb.size())
      next = xb[j];
    else
      next = x;
    visit(x, next, fa, fb);
  }
}

}  // namespace

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty measure");
  double d = 0.0;
  merge_walk(a, b, [&](double, double, double fa, double fb) {
    d = std::max(d, std::abs(fa - fb));
  });
  return d;
}

double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty measure");
  CompensatedSum s;
  merge_walk(a, b, [&](double x, double next, double fa, double fb) {
    s.add(std::abs(fa - fb) * (next - x));
  });
  return s.value();
}

double ks_test_pvalue(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const double d = ks_distance(a, b);
  const auto n = static_cast<std::size_t>(std::llround(a.effective_size()));
  const auto m = static_cast<std::size_t>(std::llround(b.effective_size()));
  return ks_pvalue(d, std::max<std::size_t>(n, 1), std::max<std::size_t>(m, 1));
}

}  // namespace kinstab
