#include "cdid/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cdid/error.hpp"
#include "cdid/summation.hpp"

namespace cdid {

const char* to_string(KernelFamily family) {
  return family == KernelFamily::Gaussian ? "gaussian" : "epanechnikov";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "epanechnikov") return KernelFamily::Epanechnikov;
  throw ConfigError("unknown kernel '" + name + "' (expected gaussian or epanechnikov)");
}

KernelSpec::KernelSpec(double bandwidth, KernelFamily family)
    : family_(family), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ConfigError("kernel bandwidth must be positive and finite");
  }
}

double kernel_value(KernelFamily family, double u) noexcept {
  switch (family) {
    case KernelFamily::Gaussian:
      return std::exp(-0.5 * u * u) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    case KernelFamily::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

double kernel_second_moment(KernelFamily family) noexcept {
  return family == KernelFamily::Gaussian ? 1.0 : 0.2;
}

double kernel_support_radius(KernelFamily family) noexcept {
  return family == KernelFamily::Gaussian ? std::numeric_limits<double>::infinity() : 1.0;
}

double rule_of_thumb_bandwidth(std::span<const double> positive_doses, std::size_t n_total) {
  if (positive_doses.size() < 2) {
    throw DataError(DataErrorKind::InsufficientDoses,
                    "bandwidth rule needs at least 2 positive doses");
  }
  if (n_total < 2) throw ConfigError("bandwidth rule needs a sample of at least 2 rows");
  const double mean = compensated_mean(positive_doses);
  CompensatedSum ss;
  for (double d : positive_doses) ss.add((d - mean) * (d - mean));
  const double sd = std::sqrt(ss.value() / static_cast<double>(positive_doses.size() - 1));
  if (!(sd > 0.0)) {
    throw DataError(DataErrorKind::InsufficientDoses,
                    "positive doses have zero variance; bandwidth undefined");
  }
  return 1.06 * sd * std::pow(static_cast<double>(n_total), -0.25);
}

double kde_density(const KernelSpec& spec, std::span<const double> doses, double d) {
  CompensatedSum acc;
  for (double di : doses) acc.add(scaled_kernel(spec, di - d));
  return doses.empty() ? 0.0 : acc.value() / static_cast<double>(doses.size());
}

}  // namespace cdid
