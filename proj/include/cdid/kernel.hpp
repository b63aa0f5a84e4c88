#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace cdid {

enum class KernelFamily { Gaussian, Epanechnikov };

const char* to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Second-order kernel with a positive bandwidth h.
class KernelSpec {
 public:
  explicit KernelSpec(double bandwidth, KernelFamily family = KernelFamily::Gaussian);

  KernelFamily family() const noexcept { return family_; }
  double bandwidth() const noexcept { return bandwidth_; }

 private:
  KernelFamily family_;
  double bandwidth_;
};

// Unscaled kernel K(u).
double kernel_value(KernelFamily family, double u) noexcept;
inline double kernel_value(const KernelSpec& spec, double u) noexcept {
  return kernel_value(spec.family(), u);
}

// K_h(u) = K(u / h) / h.
inline double scaled_kernel(const KernelSpec& spec, double u) noexcept {
  const double h = spec.bandwidth();
  return kernel_value(spec.family(), u / h) / h;
}

// Second moment of K: 1 for Gaussian, 1/5 for Epanechnikov.
double kernel_second_moment(KernelFamily family) noexcept;

// Half-width of the support, or +inf for the Gaussian.
double kernel_support_radius(KernelFamily family) noexcept;

// 1.06 * sd(positive_doses) * n_total^(-1/4) with the n-1 denominator.
double rule_of_thumb_bandwidth(std::span<const double> positive_doses, std::size_t n_total);

// Kernel density estimate at d over all doses, controls at zero included.
double kde_density(const KernelSpec& spec, std::span<const double> doses, double d);

}  // namespace cdid
