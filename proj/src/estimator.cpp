#include "cdid/estimator.hpp"

#include <cmath>
#include <numeric>

#include "cdid/error.hpp"
#include "cdid/parallel.hpp"
#include "cdid/random.hpp"
#include "cdid/summation.hpp"

namespace cdid {

namespace {

void check_finite_score(double value) {
  if (!std::isfinite(value)) {
    throw NumericError("non-finite score; check propensity clipping and density floors");
  }
}

void check_nuisances(const FoldNuisances& nuis, std::size_t n_grid, bool needs_lambda) {
  if (!nuis.propensity || !nuis.drift || nuis.smoothed_density.size() != n_grid ||
      nuis.dose_density.size() != n_grid) {
    throw NumericError("fold nuisances do not match the dose grid");
  }
  for (double f : nuis.dose_density) {
    if (!(f > 0.0)) throw NumericError("dose density estimate must be positive at every grid point");
  }
  if (needs_lambda && !(nuis.lambda > 0.0 && nuis.lambda < 1.0)) {
    throw NumericError("post-period share lambda must lie strictly inside (0, 1)");
  }
}

std::vector<double> kernel_table(std::span<const double> dose, const DoseGrid& grid,
                                 const KernelSpec& kernel) {
  const std::size_t n = dose.size();
  std::vector<double> out(grid.size() * n);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) out[j * n + i] = scaled_kernel(kernel, dose[i] - grid[j]);
  }
  return out;
}

AttCurveEstimate summarize_curve(const ScoreTable& table, const DoseGrid& grid,
                                 const KernelSpec& kernel, Design design, std::uint64_t seed) {
  const auto theta = fold_averaged_scores(table);
  const auto variance = cross_fitted_variance(table, theta);
  std::vector<AttPointEstimate> estimates(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!std::isfinite(theta[j]) || !std::isfinite(variance[j])) {
      throw NumericError("non-finite estimate at dose " + std::to_string(grid[j]));
    }
    CompensatedSum weight;
    for (std::size_t i = 0; i < table.n; ++i) weight.add(table.kernel(j, i));
    estimates[j] = {grid[j], theta[j], std::sqrt(variance[j] / static_cast<double>(table.n)),
                    kernel.bandwidth() * weight.value()};
  }
  return AttCurveEstimate{.grid = grid,
                          .estimates = std::move(estimates),
                          .bandwidth = kernel.bandwidth(),
                          .kernel = kernel.family(),
                          .folds = table.folds,
                          .design = design,
                          .seed = seed,
                          .n = table.n};
}

// Shared driver: `fit` produces fold nuisances from the complement rows and
// `row_score` evaluates the score of row i at grid point j.
template <typename Data, typename Fit, typename RowScore>
CrossFitResult cross_fit(const Data& data, const DoseGrid& grid, const FoldAssignment& folds,
                         const KernelSpec& kernel, Design design, std::uint64_t seed, Fit&& fit,
                         RowScore&& row_score) {
  const std::size_t n = data.size();
  if (folds.size() != n) throw ConfigError("fold assignment does not match the sample size");
  const std::size_t k = folds.k();
  const std::size_t g = grid.size();
  ScoreTable table{.n = n,
                   .n_grid = g,
                   .folds = folds,
                   .scores = std::vector<double>(g * n),
                   .kernels = kernel_table(data.dose(), grid, kernel),
                   .fold_density = std::vector<double>(g * k)};
  std::vector<FoldNuisances> nuisances(k);

  parallel_for(k, [&](std::size_t f) {
    const Data aux = data.subset(folds.complement(f));
    nuisances[f] = fit(aux, derive_seed(seed, {f}));
    const FoldNuisances& nuis = nuisances[f];
    check_nuisances(nuis, g, design == Design::Rcs);
    for (std::size_t j = 0; j < g; ++j) table.fold_density[j * k + f] = nuis.dose_density[j];
    for (std::size_t i : folds.members(f)) {
      const auto x = data.covariate_row(i);
      const double propensity = nuis.propensity->predict(x);
      const double drift = nuis.drift->predict(x);
      for (std::size_t j = 0; j < g; ++j) {
        const RowNuisance row{propensity, nuis.smoothed_density[j]->predict(x), drift,
                              nuis.dose_density[j]};
        table.scores[j * n + i] = row_score(i, grid[j], row, nuis);
      }
    }
  });

  AttCurveEstimate curve = summarize_curve(table, grid, kernel, design, seed);
  return CrossFitResult{std::move(curve), std::move(table), std::move(nuisances)};
}

}  // namespace

FoldAssignment::FoldAssignment(std::vector<std::size_t> fold_of, std::size_t k)
    : fold_of_(std::move(fold_of)), k_(k), members_(k) {
  if (k < 2) throw ConfigError("cross-fitting needs at least 2 folds");
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (fold_of_[i] >= k) throw ConfigError("fold index out of range");
    members_[fold_of_[i]].push_back(i);
  }
  for (const auto& m : members_) {
    if (m.empty()) throw ConfigError("every fold must contain at least one row");
  }
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t f) const {
  std::vector<std::size_t> out;
  out.reserve(fold_of_.size() - members_[f].size());
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (fold_of_[i] != f) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out;
  for (const auto& m : members_) out.push_back(m.size());
  return out;
}

std::uint64_t fold_seed(std::uint64_t seed) noexcept {
  return derive_seed(seed, {0x666f6c6473ULL});  // "folds"
}

FoldAssignment assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw ConfigError("number of folds must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = pos % k;
  return FoldAssignment(std::move(fold_of), k);
}

double orthogonal_weight(double kernel_at_dose, bool is_control, const RowNuisance& nuis) {
  const double numerator =
      kernel_at_dose * nuis.propensity - (is_control ? nuis.smoothed_density : 0.0);
  return numerator / (nuis.dose_density * nuis.propensity);
}

double score_panel(double delta_y, double dose, double d, const RowNuisance& nuis,
                   const KernelSpec& kernel) {
  const double weight = orthogonal_weight(scaled_kernel(kernel, dose - d), dose == 0.0, nuis);
  const double value = weight * (delta_y - nuis.drift);
  check_finite_score(value);
  return value;
}

double score_rcs(double y, int period, double dose, double d, const RowNuisance& nuis,
                 double lambda, const KernelSpec& kernel) {
  const double weight = orthogonal_weight(scaled_kernel(kernel, dose - d), dose == 0.0, nuis);
  const double value = weight * (transformed_outcome(y, period, lambda) - nuis.drift);
  check_finite_score(value);
  return value;
}

std::vector<double> fold_averaged_scores(const ScoreTable& table,
                                         std::span<const double> weights) {
  if (!weights.empty() && weights.size() != table.n) {
    throw ConfigError("multiplier vector length " + std::to_string(weights.size()) +
                      " does not match the sample size " + std::to_string(table.n));
  }
  const std::size_t k = table.folds.k();
  std::vector<double> out(table.n_grid);
  for (std::size_t j = 0; j < table.n_grid; ++j) {
    const double* s = table.scores.data() + j * table.n;
    CompensatedSum across;
    for (std::size_t f = 0; f < k; ++f) {
      const auto& members = table.folds.members(f);
      CompensatedSum within;
      if (weights.empty()) {
        for (std::size_t i : members) within.add(s[i]);
      } else {
        for (std::size_t i : members) within.add(weights[i] * s[i]);
      }
      across.add(within.value() / static_cast<double>(members.size()));
    }
    out[j] = across.value() / static_cast<double>(k);
  }
  return out;
}

std::vector<double> cross_fitted_variance(const ScoreTable& table,
                                          std::span<const double> theta) {
  if (theta.size() != table.n_grid) throw ConfigError("estimate vector does not match the grid");
  const std::size_t k = table.folds.k();
  std::vector<double> out(table.n_grid);
  for (std::size_t j = 0; j < table.n_grid; ++j) {
    CompensatedSum across;
    for (std::size_t f = 0; f < k; ++f) {
      const double density = table.density(j, f);
      const auto& members = table.folds.members(f);
      CompensatedSum within;
      for (std::size_t i : members) {
        const double psi = table.score(j, i) - theta[j];
        const double correction = theta[j] / density * (table.kernel(j, i) - density);
        const double term = psi - correction;
        within.add(term * term);
      }
      across.add(within.value() / static_cast<double>(members.size()));
    }
    out[j] = across.value() / static_cast<double>(k);
  }
  return out;
}

CrossFitResult cross_fit_panel(const PanelDataset& data, const DoseGrid& grid,
                               const FoldAssignment& folds, const KernelSpec& kernel,
                               const NuisanceFitter& fitter, std::uint64_t seed) {
  return cross_fit(
      data, grid, folds, kernel, Design::Panel, seed,
      [&](const PanelDataset& aux, std::uint64_t s) { return fitter.fit_panel(aux, grid, kernel, s); },
      [&](std::size_t i, double d, const RowNuisance& row, const FoldNuisances&) {
        return score_panel(data.delta_y(i), data.dose()[i], d, row, kernel);
      });
}

CrossFitResult cross_fit_rcs(const RcsDataset& data, const DoseGrid& grid,
                             const FoldAssignment& folds, const KernelSpec& kernel,
                             const NuisanceFitter& fitter, std::uint64_t seed) {
  return cross_fit(
      data, grid, folds, kernel, Design::Rcs, seed,
      [&](const RcsDataset& aux, std::uint64_t s) { return fitter.fit_rcs(aux, grid, kernel, s); },
      [&](std::size_t i, double d, const RowNuisance& row, const FoldNuisances& nuis) {
        return score_rcs(data.y()[i], data.period()[i], data.dose()[i], d, row, nuis.lambda,
                         kernel);
      });
}

CrossFitResult estimate_att_panel(const PanelDataset& data, const DoseGrid& grid, std::size_t k,
                                  const LearnerSpec& learners, const KernelSpec& kernel,
                                  std::uint64_t seed, const NuisanceSettings& settings) {
  const auto folds = assign_folds(data.size(), k, fold_seed(seed));
  return cross_fit_panel(data, grid, folds, kernel, LearnerNuisanceFitter(learners, settings), seed);
}

CrossFitResult estimate_att_rcs(const RcsDataset& data, const DoseGrid& grid, std::size_t k,
                                const LearnerSpec& learners, const KernelSpec& kernel,
                                std::uint64_t seed, const NuisanceSettings& settings) {
  const auto folds = assign_folds(data.size(), k, fold_seed(seed));
  return cross_fit_rcs(data, grid, folds, kernel, LearnerNuisanceFitter(learners, settings), seed);
}

PluginCurve naive_plugin_att(const PanelDataset& data, const DoseGrid& grid,
                             const KernelSpec& kernel, const NuisanceFitter& fitter,
                             std::uint64_t seed) {
  const FoldNuisances nuis = fitter.fit_panel(data, grid, kernel, derive_seed(seed, {0}));
  check_nuisances(nuis, grid.size(), false);
  const std::size_t n = data.size();
  std::vector<double> propensity(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (data.dose()[i] == 0.0) propensity[i] = nuis.propensity->predict(data.covariate_row(i));
  }
  PluginCurve out{grid, std::vector<double>(grid.size())};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double f_d = nuis.dose_density[j];
    CompensatedSum kernel_term;
    CompensatedSum control_term;
    for (std::size_t i = 0; i < n; ++i) {
      const double dy = data.delta_y(i);
      kernel_term.add(dy * scaled_kernel(kernel, data.dose()[i] - grid[j]));
      if (data.dose()[i] == 0.0) {
        const double f_h = nuis.smoothed_density[j]->predict(data.covariate_row(i));
        control_term.add(dy * f_h / propensity[i]);
      }
    }
    const double value =
        (kernel_term.value() - control_term.value()) / (static_cast<double>(n) * f_d);
    if (!std::isfinite(value)) throw NumericError("non-finite plug-in estimate");
    out.att_hat[j] = value;
  }
  return out;
}

PluginCurve naive_plugin_att(const PanelDataset& data, const DoseGrid& grid,
                             const LearnerSpec& learners, const KernelSpec& kernel,
                             std::uint64_t seed, const NuisanceSettings& settings) {
  return naive_plugin_att(data, grid, kernel, LearnerNuisanceFitter(learners, settings), seed);
}

}  // namespace cdid
