#pragma once

#include <cmath>
#include <cstddef>

namespace jssl {

// Welford running mean and variance.
class RunningStats {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  // Sample variance (n - 1 denominator); 0 for fewer than two values.
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double standard_error() const { return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0; }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace jssl
