#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdid/estimator.hpp"

namespace cdid {

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr std::size_t kDefaultBootstrapDraws = 1000;
inline constexpr std::size_t kMinBootstrapDraws = 100;

double normal_cdf(double x) noexcept;
// Inverse standard normal CDF; p must lie in (0, 1).
double normal_quantile(double p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// estimate -/+ z_{1-alpha/2} se.
Interval pointwise_ci_normal(double estimate, double se, double alpha = kDefaultAlpha);

// Order-statistic quantile: the ceil(p B)-th smallest value (1-based),
// clamped to [1, B].
double empirical_quantile(std::vector<double> values, double p);

// Multipliers xi_i ~ N(1, 1), one per observation.
std::vector<double> draw_multipliers(std::size_t n, std::uint64_t seed);

// Bootstrap replicate of the curve: fold-averaged multiplier-weighted scores.
// Unit multipliers reproduce the point estimate exactly.
std::vector<double> bootstrap_replicate(const ScoreTable& table, std::span<const double> xi);

struct BootstrapDraws {
  std::size_t n_boot = 0;
  std::size_t n_grid = 0;
  std::vector<double> values;  // [b * n_grid + j]

  double at(std::size_t b, std::size_t j) const noexcept { return values[b * n_grid + j]; }
};

// Replicate b uses multipliers seeded with derive_seed(seed, {b}), so the
// draws do not depend on the thread count.
BootstrapDraws run_multiplier_bootstrap(const ScoreTable& table, std::size_t n_boot,
                                        std::uint64_t seed);

// [theta - c_{1-alpha/2}, theta - c_{alpha/2}] where c_q is the q-quantile
// of the deviations theta*_b - theta. Needs at least two replicates.
Interval pointwise_ci_bootstrap(double estimate, std::span<const double> replicates,
                                double alpha = kDefaultAlpha);
Interval pointwise_ci_bootstrap(const BootstrapDraws& draws, std::size_t j, double estimate,
                                double alpha = kDefaultAlpha);

struct UniformBand {
  std::vector<double> dose;
  std::vector<double> center;
  std::vector<double> se;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> half_width;  // critical_value * se
  double critical_value = 0.0;
  // Studentized pointwise bootstrap intervals: center -/+ c_j se_j with c_j
  // the (1 - alpha) quantile of |theta_j - theta*_bj| / se_j.
  std::vector<double> lo_pointwise;
  std::vector<double> hi_pointwise;
  // Percentile pointwise intervals.
  std::vector<Interval> percentile;
  double alpha = kDefaultAlpha;
  std::size_t n_boot = 0;
  std::uint64_t seed = 0;
};

// Sup-t band from the bootstrap draws. Requires n_boot >= 100 and positive
// standard errors.
UniformBand uniform_band(const AttCurveEstimate& curve, const BootstrapDraws& draws,
                         double alpha = kDefaultAlpha, std::uint64_t seed = 0);

UniformBand uniform_band(const CrossFitResult& fit, std::size_t n_boot, double alpha,
                         std::uint64_t seed);

// Seed used for the bootstrap of a run with master seed `seed`.
std::uint64_t bootstrap_seed(std::uint64_t seed) noexcept;

}  // namespace cdid
