#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace kinstab {

/// Real function on the uniform grid x_i = origin + i h. Values outside the
/// stored range are zero.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(double origin, double h, std::vector<double> values)
      : origin_(origin), h_(h), v_(std::move(values)) {
    if (!(h > 0.0)) throw std::invalid_argument("GridFunction: spacing must be positive");
  }

  /// Samples f on [a, b] with spacing h (b snapped to the grid).
  static GridFunction sample(const std::function<double(double)>& f, double a, double b,
                             double h) {
    const auto n = static_cast<std::size_t>(std::llround((b - a) / h)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(a + static_cast<double>(i) * h);
    return GridFunction(a, h, std::move(v));
  }

  double origin() const noexcept { return origin_; }
  double spacing() const noexcept { return h_; }
  std::size_t size() const noexcept { return v_.size(); }
  double x(std::size_t i) const noexcept { return origin_ + static_cast<double>(i) * h_; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  const std::vector<double>& values() const noexcept { return v_; }

  /// Linear interpolation, zero outside the grid.
  double operator()(double x) const noexcept {
    const double s = (x - origin_) / h_;
    if (s < 0.0 || s > static_cast<double>(v_.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(s);
    if (i + 1 >= v_.size()) return v_.back();
    const double f = s - static_cast<double>(i);
    return v_[i] + f * (v_[i + 1] - v_[i]);
  }

  /// First and last nonzero node; false when every value is zero.
  bool support(std::size_t& lo, std::size_t& hi) const noexcept {
    lo = v_.size();
    hi = 0;
    for (std::size_t i = 0; i < v_.size(); ++i)
      if (v_[i] != 0.0) {
        if (lo == v_.size()) lo = i;
        hi = i;
      }
    return lo != v_.size();
  }

  /// Index of the node at x = 0, or -1 when 0 is not a node.
  long interface_index() const noexcept {
    const double s = -origin_ / h_;
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 || r < 0 || r > static_cast<double>(v_.size() - 1)) return -1;
    return static_cast<long>(r);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  double origin_ = 0.0;
  double h_ = 1.0;
  std::vector<double> v_;
};

}  // namespace kinstab
