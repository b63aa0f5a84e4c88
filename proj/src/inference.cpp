#include "cdid/inference.hpp"

#include <algorithm>
#include <cmath>

#include "cdid/error.hpp"
#include "cdid/parallel.hpp"
#include "cdid/random.hpp"

namespace cdid {

namespace {

template <std::size_t N>
double horner(const double (&c)[N], double x) noexcept {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

}  // namespace

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Wichura (1988), algorithm AS 241, PPND16.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile needs p in (0, 1)");
  static constexpr double a[] = {3.3871328727963666080e0, 1.3314166789178437745e2,
                                 1.9715909503065514427e3, 1.3731693765509461125e4,
                                 4.5921953931549871457e4, 6.7265770927008700853e4,
                                 3.3430575583588128105e4, 2.5090809287301226727e3};
  static constexpr double b[] = {1.0,
                                 4.2313330701600911252e1, 6.8718700749205790830e2,
                                 5.3941960214247511077e3, 2.1213794301586595867e4,
                                 3.9307895800092710610e4, 2.8729085735721942674e4,
                                 5.2264952788528545610e3};
  static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                 5.76949722146069140550e0, 3.64784832476320460504e0,
                                 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                 2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {1.0,
                                 2.05319162663775882187e0, 1.67638483018380384940e0,
                                 6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                 1.05075007164441684324e-9};
  static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                 1.78482653991729133580e0, 2.96560571828504891230e-1,
                                 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                 1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                 2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    value = horner(e, r) / horner(f, r);
  }
  return q < 0.0 ? -value : value;
}

Interval pointwise_ci_normal(double estimate, double se, double alpha) {
  check_alpha(alpha);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  return {estimate - z * se, estimate + z * se};
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  const auto b = static_cast<double>(values.size());
  // The small offset keeps p B that should be an integer from rounding up.
  auto rank = static_cast<std::size_t>(std::ceil(p * b - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

std::vector<double> draw_multipliers(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xi(n);
  for (double& x : xi) x = 1.0 + rng.normal();
  return xi;
}

std::vector<double> bootstrap_replicate(const ScoreTable& table, std::span<const double> xi) {
  if (xi.size() != table.n) {
    throw ConfigError("multiplier vector length " + std::to_string(xi.size()) +
                      " does not match the sample size " + std::to_string(table.n));
  }
  return fold_averaged_scores(table, xi);
}

std::uint64_t bootstrap_seed(std::uint64_t seed) noexcept {
  return derive_seed(seed, {0x626f6f74ULL});  // "boot"
}

BootstrapDraws run_multiplier_bootstrap(const ScoreTable& table, std::size_t n_boot,
                                        std::uint64_t seed) {
  if (n_boot == 0) throw ConfigError("bootstrap needs at least one draw");
  BootstrapDraws out{n_boot, table.n_grid, std::vector<double>(n_boot * table.n_grid)};
  parallel_for(n_boot, [&](std::size_t b) {
    const auto xi = draw_multipliers(table.n, derive_seed(seed, {b}));
    const auto rep = bootstrap_replicate(table, xi);
    std::copy(rep.begin(), rep.end(), out.values.begin() + static_cast<std::ptrdiff_t>(b * table.n_grid));
  });
  return out;
}

Interval pointwise_ci_bootstrap(double estimate, std::span<const double> replicates,
                                double alpha) {
  check_alpha(alpha);
  if (replicates.size() < 2) throw ConfigError("bootstrap interval needs at least 2 replicates");
  std::vector<double> dev(replicates.size());
  for (std::size_t b = 0; b < replicates.size(); ++b) dev[b] = replicates[b] - estimate;
  const double upper = empirical_quantile(dev, 1.0 - alpha / 2.0);
  const double lower = empirical_quantile(std::move(dev), alpha / 2.0);
  return {estimate - upper, estimate - lower};
}

Interval pointwise_ci_bootstrap(const BootstrapDraws& draws, std::size_t j, double estimate,
                                double alpha) {
  if (j >= draws.n_grid) throw ConfigError("grid index out of range");
  std::vector<double> column(draws.n_boot);
  for (std::size_t b = 0; b < draws.n_boot; ++b) column[b] = draws.at(b, j);
  return pointwise_ci_bootstrap(estimate, column, alpha);
}

UniformBand uniform_band(const AttCurveEstimate& curve, const BootstrapDraws& draws, double alpha,
                         std::uint64_t seed) {
  check_alpha(alpha);
  const std::size_t g = curve.estimates.size();
  if (draws.n_grid != g) throw ConfigError("bootstrap draws do not match the dose grid");
  if (draws.n_boot < kMinBootstrapDraws) {
    throw ConfigError("uniform band needs at least " + std::to_string(kMinBootstrapDraws) +
                      " bootstrap draws, got " + std::to_string(draws.n_boot));
  }
  UniformBand band;
  band.alpha = alpha;
  band.n_boot = draws.n_boot;
  band.seed = seed;
  for (const auto& e : curve.estimates) {
    if (!(e.se > 0.0) || !std::isfinite(e.se)) {
      throw NumericError("uniform band needs a positive standard error at every grid point");
    }
    band.dose.push_back(e.dose);
    band.center.push_back(e.att_hat);
    band.se.push_back(e.se);
  }

  std::vector<double> sup(draws.n_boot, 0.0);
  std::vector<double> column(draws.n_boot);
  std::vector<double> pointwise_crit(g);
  for (std::size_t j = 0; j < g; ++j) {
    for (std::size_t b = 0; b < draws.n_boot; ++b) {
      const double t = std::abs(band.center[j] - draws.at(b, j)) / band.se[j];
      column[b] = t;
      sup[b] = std::max(sup[b], t);
    }
    pointwise_crit[j] = empirical_quantile(column, 1.0 - alpha);
    band.percentile.push_back(pointwise_ci_bootstrap(draws, j, band.center[j], alpha));
  }
  band.critical_value = empirical_quantile(std::move(sup), 1.0 - alpha);
  for (std::size_t j = 0; j < g; ++j) {
    band.lo.push_back(band.center[j] - band.critical_value * band.se[j]);
    band.hi.push_back(band.center[j] + band.critical_value * band.se[j]);
    band.half_width.push_back(band.critical_value * band.se[j]);
    band.lo_pointwise.push_back(band.center[j] - pointwise_crit[j] * band.se[j]);
    band.hi_pointwise.push_back(band.center[j] + pointwise_crit[j] * band.se[j]);
  }
  return band;
}

UniformBand uniform_band(const CrossFitResult& fit, std::size_t n_boot, double alpha,
                         std::uint64_t seed) {
  if (n_boot < kMinBootstrapDraws) {
    throw ConfigError("uniform band needs at least " + std::to_string(kMinBootstrapDraws) +
                      " bootstrap draws, got " + std::to_string(n_boot));
  }
  const auto draws = run_multiplier_bootstrap(fit.scores, n_boot, bootstrap_seed(seed));
  return uniform_band(fit.curve, draws, alpha, seed);
}

}  // namespace cdid
