#include <algorithm>
#include <cmath>
#include <vector>

#include "cdid/error.hpp"
#include "cdid/estimator.hpp"
#include "cdid/inference.hpp"
#include "cdid/parallel.hpp"
#include "cdid/random.hpp"
#include "cdid/simulation.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cdid;

namespace {

CrossFitResult ridge_fit(std::size_t grid_points, std::uint64_t seed) {
  DgpSpec dgp;
  dgp.p = 5;
  const PanelDataset data = generate_panel(dgp, 600, seed);
  const DoseGrid grid = make_dose_grid(data, grid_points);
  LearnerSpec ridge;
  ridge.kind = LearnerKind::Ridge;
  const KernelSpec k(rule_of_thumb_bandwidth(positive_doses(data.dose()), data.size()));
  return estimate_att_panel(data, grid, 5, ridge, k, seed);
}

}  // namespace

TEST_CASE("normal quantile against a series oracle") {
  // The series oracle loses digits in the far tails; check those by round trip.
  for (double p : {0.001, 0.025, 0.1, 0.3, 0.5, 0.66, 0.84, 0.975, 0.999}) {
    CHECK(normal_quantile(p) == doctest::Approx(bisection_normal_quantile(p)).epsilon(1e-9));
  }
  for (double p : {1e-10, 1e-6, 0.001, 0.5, 0.999, 1.0 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(normal_quantile(1.0 - 0.32 / 2.0) == doctest::Approx(0.994458).epsilon(1e-6));
  CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
  CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
}

TEST_CASE("normal pointwise interval") {
  const Interval ci = pointwise_ci_normal(1.0, 0.1);
  CHECK(ci.lo == doctest::Approx(0.804).epsilon(1e-3));
  CHECK(ci.hi == doctest::Approx(1.196).epsilon(1e-3));
  CHECK(ci.hi - 1.0 == doctest::Approx(1.0 - ci.lo));
  const Interval wide = pointwise_ci_normal(0.0, 1.0, 0.32);
  CHECK(wide.hi == doctest::Approx(0.994458).epsilon(1e-6));
}

TEST_CASE("empirical quantile is an order statistic") {
  const std::vector<double> v{5.0, 1.0, 4.0, 2.0, 3.0};
  CHECK(empirical_quantile(v, 0.2) == 1.0);
  CHECK(empirical_quantile(v, 0.21) == 2.0);
  CHECK(empirical_quantile(v, 0.6) == 3.0);
  CHECK(empirical_quantile(v, 1.0) == 5.0);
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  std::vector<double> hundred(100);
  for (std::size_t i = 0; i < 100; ++i) hundred[i] = static_cast<double>(100 - i);
  CHECK(empirical_quantile(hundred, 0.95) == 95.0);
}

TEST_CASE("percentile interval from four replicates") {
  // Deviations (-2, -1, 1, 2), alpha 0.5: quantiles at 0.25 and 0.75 are
  // -2 and 1, so the interval is (theta - 1, theta + 2).
  const std::vector<double> reps{8.0, 9.0, 11.0, 12.0};
  const Interval ci = pointwise_ci_bootstrap(10.0, reps, 0.5);
  CHECK(ci.lo == 9.0);
  CHECK(ci.hi == 12.0);
  CHECK_THROWS_AS(pointwise_ci_bootstrap(10.0, std::vector<double>{1.0}, 0.5), ConfigError);
}

TEST_CASE("multiplier moments") {
  const auto xi = draw_multipliers(100000, 3);
  double mean = 0.0;
  for (double v : xi) mean += v;
  mean /= 1e5;
  double var = 0.0;
  for (double v : xi) var += (v - mean) * (v - mean);
  var /= 1e5 - 1.0;
  CHECK(std::abs(mean - 1.0) < 4.0 / std::sqrt(1e5));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / 1e5));
  CHECK(draw_multipliers(10, 3) == draw_multipliers(10, 3));
  CHECK(draw_multipliers(10, 3) != draw_multipliers(10, 4));
}

TEST_CASE("constant multipliers scale the estimate") {
  const auto fit = ridge_fit(3, 11);
  const std::size_t n = fit.scores.n;
  const auto one = bootstrap_replicate(fit.scores, std::vector<double>(n, 1.0));
  const auto two = bootstrap_replicate(fit.scores, std::vector<double>(n, 2.5));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(one[j] == fit.curve.estimates[j].att_hat);
    CHECK(two[j] == doctest::Approx(2.5 * fit.curve.estimates[j].att_hat).epsilon(1e-13));
  }
  CHECK_THROWS_AS(bootstrap_replicate(fit.scores, std::vector<double>(n - 1, 1.0)), ConfigError);
}

TEST_CASE("bootstrap draws ignore the thread count") {
  const auto fit = ridge_fit(3, 12);
  const unsigned saved = thread_limit();
  set_thread_limit(1);
  const auto a = run_multiplier_bootstrap(fit.scores, 120, 5);
  set_thread_limit(3);
  const auto b = run_multiplier_bootstrap(fit.scores, 120, 5);
  set_thread_limit(saved);
  CHECK(a.values == b.values);
  // Replicate b is the weighted average under its own seeded multipliers.
  const auto xi = draw_multipliers(fit.scores.n, derive_seed(5, {7}));
  const auto rep = bootstrap_replicate(fit.scores, xi);
  for (std::size_t j = 0; j < 3; ++j) CHECK(a.at(7, j) == rep[j]);
}

TEST_CASE("uniform band properties") {
  const auto fit = ridge_fit(6, 13);
  const auto draws = run_multiplier_bootstrap(fit.scores, 400, 21);
  const auto band = uniform_band(fit.curve, draws, 0.05, 21);
  REQUIRE(band.lo.size() == 6);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(band.lo[j] <= band.lo_pointwise[j]);
    CHECK(band.hi[j] >= band.hi_pointwise[j]);
    CHECK(band.lo[j] < band.center[j]);
    CHECK(band.half_width[j] == doctest::Approx(band.critical_value * band.se[j]));
  }
  CHECK(band.critical_value > normal_quantile(0.975) * 0.8);

  double previous = INFINITY;
  for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const double c = uniform_band(fit.curve, draws, alpha).critical_value;
    CHECK(c <= previous);
    previous = c;
  }

  const auto again = uniform_band(fit, 400, 0.05, 21);
  CHECK(again.critical_value == uniform_band(fit, 400, 0.05, 21).critical_value);

  const auto small = run_multiplier_bootstrap(fit.scores, 99, 21);
  CHECK_THROWS_AS(uniform_band(fit.curve, small), ConfigError);
  CHECK_THROWS_AS(uniform_band(fit, 50, 0.05, 1), ConfigError);
}

TEST_CASE("single-point band equals the pointwise studentized interval") {
  const auto fit = ridge_fit(1, 14);
  const auto band = uniform_band(fit, 500, 0.05, 3);
  CHECK(band.lo[0] == band.lo_pointwise[0]);
  CHECK(band.hi[0] == band.hi_pointwise[0]);
}

TEST_CASE("band rejects a zero standard error") {
  auto fit = ridge_fit(2, 15);
  const auto draws = run_multiplier_bootstrap(fit.scores, 100, 1);
  fit.curve.estimates[1].se = 0.0;
  CHECK_THROWS_AS(uniform_band(fit.curve, draws), NumericError);
}
