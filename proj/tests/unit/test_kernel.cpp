#include <cmath>
#include <vector>

#include "cdid/error.hpp"
#include "cdid/kernel.hpp"
#include "cdid/random.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cdid;

namespace {

constexpr KernelFamily kFamilies[] = {KernelFamily::Gaussian, KernelFamily::Epanechnikov};

double moment(KernelFamily family, int power) {
  // Unit panels so the adaptive rule cannot stop on a flat first estimate.
  const int r = family == KernelFamily::Gaussian ? 12 : 1;
  double total = 0.0;
  for (int a = -r; a < r; ++a) {
    total += adaptive_simpson(
        [&](double u) { return std::pow(u, power) * kernel_value(family, u); }, a, a + 1, 1e-14);
  }
  return total;
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(kernel_value(KernelFamily::Gaussian, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(kernel_value(KernelFamily::Gaussian, 1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-15));
  CHECK(kernel_value(KernelFamily::Epanechnikov, 1.5) == 0.0);
  CHECK(kernel_value(KernelFamily::Epanechnikov, 0.0) == 0.75);
  for (auto f : kFamilies) {
    for (double u = -3.0; u <= 3.0; u += 0.125) CHECK(kernel_value(f, u) == kernel_value(f, -u));
  }
}

TEST_CASE("scaled kernel identities") {
  const KernelSpec half(0.5);
  CHECK(scaled_kernel(half, 0.0) == doctest::Approx(0.7978845608028654).epsilon(1e-15));
  for (auto f : kFamilies) {
    const KernelSpec one(1.0, f);
    const KernelSpec h(0.37, f);
    for (double u = -2.0; u <= 2.0; u += 0.1) {
      CHECK(scaled_kernel(one, u) == kernel_value(f, u));
      CHECK(scaled_kernel(h, u) == doctest::Approx(kernel_value(f, u / 0.37) / 0.37).epsilon(1e-15));
    }
  }
  const KernelSpec quarter(0.25);
  const double mass =
      adaptive_simpson([&](double u) { return scaled_kernel(quarter, u); }, -10.0, 10.0, 1e-13);
  CHECK(std::abs(mass - 1.0) < 1e-8);
}

TEST_CASE("kernel moment conditions hold by quadrature") {
  for (auto f : kFamilies) {
    CAPTURE(to_string(f));
    CHECK(std::abs(moment(f, 0) - 1.0) < 1e-8);
    CHECK(std::abs(moment(f, 1)) < 1e-8);
    CHECK(std::abs(moment(f, 2) - kernel_second_moment(f)) < 1e-8);
  }
}

TEST_CASE("kernel spec validation and names") {
  CHECK_THROWS_AS(KernelSpec(0.0), ConfigError);
  CHECK_THROWS_AS(KernelSpec(-1.0), ConfigError);
  CHECK_THROWS_AS(KernelSpec(std::nan("")), ConfigError);
  CHECK(kernel_family_from_string("epanechnikov") == KernelFamily::Epanechnikov);
  CHECK_THROWS_AS(kernel_family_from_string("box"), ConfigError);
}

TEST_CASE("rule of thumb bandwidth") {
  // Doses with sample sd exactly 1: {-1, 0, 1} shifted positive has sd 1.
  const std::vector<double> unit_sd{1.0, 2.0, 3.0};
  CHECK(rule_of_thumb_bandwidth(unit_sd, 256) == doctest::Approx(0.265).epsilon(1e-14));
  CHECK(rule_of_thumb_bandwidth(unit_sd, 10000) == doctest::Approx(0.106).epsilon(1e-14));

  Rng rng(21);
  std::vector<double> doses(2000);
  for (auto& d : doses) d = rng.exponential(1.0);
  double mean = 0.0;
  for (double d : doses) mean += d;
  mean /= 2000.0;
  double ss = 0.0;
  for (double d : doses) ss += (d - mean) * (d - mean);
  const double expected = 1.06 * std::sqrt(ss / 1999.0) * std::pow(2000.0, -0.25);
  CHECK(rule_of_thumb_bandwidth(doses, 2000) == doctest::Approx(expected).epsilon(1e-12));

  const std::vector<double> flat{0.5, 0.5, 0.5};
  CHECK_THROWS_AS(rule_of_thumb_bandwidth(flat, 10), DataError);
}

TEST_CASE("kernel density estimate") {
  const KernelSpec one(1.0);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK(kde_density(one, zeros, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  const std::vector<double> single{1.0};
  CHECK(kde_density(KernelSpec(0.5), single, 1.0) == doctest::Approx(0.7978845608028654).epsilon(1e-15));

  Rng rng(8);
  std::vector<double> doses(500);
  for (auto& d : doses) d = 0.5 + rng.uniform();
  const double h = rule_of_thumb_bandwidth(doses, doses.size());
  const KernelSpec spec(h);
  const double f = kde_density(spec, doses, 1.0);
  // Sampling sd of a Gaussian KDE at an interior point of a unit density:
  // sqrt(R(K) f / (n h)) with R(K) = 1 / (2 sqrt(pi)).
  const double se = std::sqrt(0.28209479177387814 / (500.0 * h));
  CHECK(std::abs(f - 1.0) < 3.0 * se);

  const double mass =
      adaptive_simpson([&](double d) { return kde_density(spec, doses, d); }, -5.0, 7.0, 1e-10);
  CHECK(std::abs(mass - 1.0) < 1e-3);
  for (double d = -1.0; d < 3.0; d += 0.1) CHECK(kde_density(spec, doses, d) >= 0.0);
}
