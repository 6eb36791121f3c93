#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace tlpo {

/// Neumaier-compensated running sum.
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
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Welford online mean / variance. Variance is the population variance
/// (divide by n); sample_variance divides by n - 1.
class RunningStats {
 public:
  void push(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
    if (x < min_) min_ = x;
    if (x > max_) max_ = x;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return n_ ? mean_ : std::numeric_limits<double>::quiet_NaN(); }
  double variance() const noexcept {
    return n_ ? std::max(0.0, m2_ / static_cast<double>(n_)) : std::numeric_limits<double>::quiet_NaN();
  }
  double sample_variance() const noexcept {
    return n_ > 1 ? std::max(0.0, m2_ / static_cast<double>(n_ - 1)) : std::numeric_limits<double>::quiet_NaN();
  }
  /// Standard error of the mean (sample sd / sqrt(n)).
  double standard_error() const noexcept {
    return n_ > 1 ? std::sqrt(sample_variance() / static_cast<double>(n_)) : std::numeric_limits<double>::quiet_NaN();
  }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

}  // namespace tlpo
