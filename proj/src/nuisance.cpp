#include "cdid/nuisance.hpp"

#include <algorithm>
#include <cmath>

#include "cdid/csv.hpp"
#include "cdid/error.hpp"
#include "cdid/parallel.hpp"
#include "cdid/random.hpp"
#include "cdid/summation.hpp"

namespace cdid {

namespace {

enum Role : std::uint64_t { kPropensityRole = 1, kDensityRole = 2, kDriftRole = 3 };

Matrix control_rows(const Matrix& x, std::span<const double> dose,
                    std::vector<std::size_t>& rows) {
  rows.clear();
  for (std::size_t i = 0; i < dose.size(); ++i) {
    if (dose[i] == 0.0) rows.push_back(i);
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

void require_controls(std::size_t n_controls, const LearnerSpec& spec) {
  const std::size_t needed =
      spec.kind == LearnerKind::RandomForest ? std::max<std::size_t>(spec.forest.min_leaf, 1) : 1;
  if (n_controls < needed) {
    throw DataError(DataErrorKind::NoControlRows,
                    "auxiliary sample has " + std::to_string(n_controls) +
                        " control rows; at least " + std::to_string(needed) + " required");
  }
}

std::vector<double> dose_densities(const KernelSpec& kernel, std::span<const double> dose,
                                   std::span<const double> grid) {
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out[j] = kde_density(kernel, dose, grid[j]);
    if (!(out[j] > 0.0)) {
      throw NumericError("kernel density of the dose is zero at grid point " +
                         format_double(grid[j]));
    }
  }
  return out;
}

}  // namespace

ClampedRegressor::ClampedRegressor(RegressorPtr base, double lo, double hi)
    : base_(std::move(base)), lo_(lo), hi_(hi) {}

double ClampedRegressor::predict(std::span<const double> x) const {
  return std::clamp(base_->predict(x), lo_, hi_);
}

RegressorPtr clip_propensity(RegressorPtr base, double kappa) {
  if (!(kappa > 0.0 && kappa < 0.5)) throw ConfigError("clip kappa must lie in (0, 0.5)");
  return std::make_shared<const ClampedRegressor>(std::move(base), kappa, 1.0 - kappa);
}

RegressorPtr floor_density(RegressorPtr base, double floor) {
  if (!(floor > 0.0)) throw ConfigError("density floor must be positive");
  return std::make_shared<const ClampedRegressor>(std::move(base), floor,
                                                  std::numeric_limits<double>::infinity());
}

RegressorPtr fit_control_propensity(const Matrix& covariates, std::span<const double> dose,
                                    const LearnerSpec& spec, double kappa, std::uint64_t seed) {
  std::vector<double> labels(dose.size());
  std::size_t controls = 0;
  for (std::size_t i = 0; i < dose.size(); ++i) {
    labels[i] = dose[i] == 0.0 ? 1.0 : 0.0;
    controls += dose[i] == 0.0;
  }
  if (controls == 0 || controls == dose.size()) {
    throw DataError(controls == 0 ? DataErrorKind::NoControlRows : DataErrorKind::NoTreatedRows,
                    "propensity needs both control and treated rows in the auxiliary sample");
  }
  return clip_propensity(fit_probability(covariates, labels, spec, seed), kappa);
}

std::vector<RegressorPtr> fit_smoothed_conditional_density(
    const Matrix& covariates, std::span<const double> dose, std::span<const double> grid,
    const KernelSpec& kernel, const LearnerSpec& spec, double floor, std::uint64_t seed) {
  std::vector<RegressorPtr> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t j) {
    std::vector<double> target(dose.size());
    for (std::size_t i = 0; i < dose.size(); ++i) target[i] = scaled_kernel(kernel, dose[i] - grid[j]);
    out[j] = floor_density(fit_regression(covariates, target, spec, derive_seed(seed, {j})), floor);
  });
  return out;
}

RegressorPtr fit_control_drift_panel(const PanelDataset& aux, const LearnerSpec& spec,
                                     std::uint64_t seed) {
  std::vector<std::size_t> rows;
  const Matrix x = control_rows(aux.covariates(), aux.dose(), rows);
  require_controls(rows.size(), spec);
  std::vector<double> target;
  target.reserve(rows.size());
  for (std::size_t i : rows) target.push_back(aux.delta_y(i));
  return fit_regression(x, target, spec, seed);
}

double transformed_outcome(double y, int period, double lambda) noexcept {
  return (static_cast<double>(period) - lambda) * y / (lambda * (1.0 - lambda));
}

RegressorPtr fit_control_drift_rcs(const RcsDataset& aux, double lambda_hat,
                                   const LearnerSpec& spec, std::uint64_t seed) {
  if (!(lambda_hat > 0.0 && lambda_hat < 1.0)) {
    throw NumericError("post-period share lambda must lie strictly inside (0, 1)");
  }
  std::vector<std::size_t> rows;
  const Matrix x = control_rows(aux.covariates(), aux.dose(), rows);
  require_controls(rows.size(), spec);
  std::vector<double> target;
  target.reserve(rows.size());
  for (std::size_t i : rows) target.push_back(transformed_outcome(aux.y()[i], aux.period()[i], lambda_hat));
  return fit_regression(x, target, spec, seed);
}

double estimate_lambda(std::span<const int> period) {
  std::size_t post = 0;
  for (int t : period) post += t == 1;
  if (period.empty() || post == 0 || post == period.size()) {
    throw DataError(DataErrorKind::SinglePeriod,
                    "both periods required to estimate the post-period share", "period");
  }
  return static_cast<double>(post) / static_cast<double>(period.size());
}

LearnerNuisanceFitter::LearnerNuisanceFitter(LearnerSpec spec, NuisanceSettings settings)
    : spec_(std::move(spec)), settings_(settings) {}

FoldNuisances LearnerNuisanceFitter::fit_panel(const PanelDataset& aux, const DoseGrid& grid,
                                               const KernelSpec& kernel,
                                               std::uint64_t seed) const {
  FoldNuisances out;
  out.dose_density = dose_densities(kernel, aux.dose(), grid.points());
  out.smoothed_density.resize(grid.size());
  // Tasks: 0 = propensity, 1 = drift, 2.. = one density regression per grid point.
  parallel_for(grid.size() + 2, [&](std::size_t task) {
    if (task == 0) {
      out.propensity = fit_control_propensity(aux.covariates(), aux.dose(), spec_,
                                              settings_.clip_kappa,
                                              derive_seed(seed, {kPropensityRole}));
    } else if (task == 1) {
      out.drift = fit_control_drift_panel(aux, spec_, derive_seed(seed, {kDriftRole}));
    } else {
      const std::size_t j = task - 2;
      const double point = grid[j];
      out.smoothed_density[j] = fit_smoothed_conditional_density(
          aux.covariates(), aux.dose(), std::span<const double>(&point, 1), kernel, spec_,
          settings_.density_floor, derive_seed(seed, {kDensityRole, j}))[0];
    }
  });
  return out;
}

FoldNuisances LearnerNuisanceFitter::fit_rcs(const RcsDataset& aux, const DoseGrid& grid,
                                             const KernelSpec& kernel, std::uint64_t seed) const {
  FoldNuisances out;
  out.lambda = estimate_lambda(aux.period());
  out.dose_density = dose_densities(kernel, aux.dose(), grid.points());
  out.smoothed_density.resize(grid.size());
  parallel_for(grid.size() + 2, [&](std::size_t task) {
    if (task == 0) {
      out.propensity = fit_control_propensity(aux.covariates(), aux.dose(), spec_,
                                              settings_.clip_kappa,
                                              derive_seed(seed, {kPropensityRole}));
    } else if (task == 1) {
      out.drift = fit_control_drift_rcs(aux, out.lambda, spec_, derive_seed(seed, {kDriftRole}));
    } else {
      const std::size_t j = task - 2;
      const double point = grid[j];
      out.smoothed_density[j] = fit_smoothed_conditional_density(
          aux.covariates(), aux.dose(), std::span<const double>(&point, 1), kernel, spec_,
          settings_.density_floor, derive_seed(seed, {kDensityRole, j}))[0];
    }
  });
  return out;
}

}  // namespace cdid
