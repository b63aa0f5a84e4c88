#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace cdid {

// Neumaier's variant of Kahan compensated summation.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

inline double compensated_mean(std::span<const double> values) noexcept {
  return values.empty() ? 0.0 : compensated_sum(values) / static_cast<double>(values.size());
}

}  // namespace cdid
