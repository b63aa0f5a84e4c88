#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cdid/dataset.hpp"
#include "cdid/kernel.hpp"
#include "cdid/learner.hpp"

namespace cdid {

inline constexpr double kDefaultClipKappa = 0.01;
inline constexpr double kDefaultDensityFloor = 1e-3;

struct NuisanceSettings {
  double clip_kappa = kDefaultClipKappa;
  double density_floor = kDefaultDensityFloor;
};

// Wraps an arbitrary function of the covariate row (closed-form nuisances,
// test doubles).
class FunctionRegressor final : public Regressor {
 public:
  explicit FunctionRegressor(std::function<double(std::span<const double>)> fn)
      : fn_(std::move(fn)) {}
  double predict(std::span<const double> x) const override { return fn_(x); }

 private:
  std::function<double(std::span<const double>)> fn_;
};

// Clamps the wrapped model's predictions to [lo, hi].
class ClampedRegressor final : public Regressor {
 public:
  ClampedRegressor(RegressorPtr base, double lo, double hi);
  double predict(std::span<const double> x) const override;

 private:
  RegressorPtr base_;
  double lo_;
  double hi_;
};

RegressorPtr clip_propensity(RegressorPtr base, double kappa);
RegressorPtr floor_density(RegressorPtr base, double floor);

// Nuisance functions fitted on the complement of one fold.
struct FoldNuisances {
  RegressorPtr propensity;                  // P(D=0|X), clipped to [kappa, 1-kappa]
  std::vector<RegressorPtr> smoothed_density;  // E[K_h(D-d_j)|X] per grid point, floored
  RegressorPtr drift;                       // control-group outcome drift given X
  std::vector<double> dose_density;         // kernel density of D at each grid point
  double lambda = std::numeric_limits<double>::quiet_NaN();  // P(T=1); repeated cross-sections
};

// Regression of 1{D=0} on X, clipped to [kappa, 1-kappa].
RegressorPtr fit_control_propensity(const Matrix& covariates, std::span<const double> dose,
                                    const LearnerSpec& spec, double kappa, std::uint64_t seed);

// One regression of K_h(D - d_j) on X per grid point over all rows,
// floored at `floor`.
std::vector<RegressorPtr> fit_smoothed_conditional_density(
    const Matrix& covariates, std::span<const double> dose, std::span<const double> grid,
    const KernelSpec& kernel, const LearnerSpec& spec, double floor, std::uint64_t seed);

// E[Y_t - Y_{t-1} | X, D=0] from the control rows.
RegressorPtr fit_control_drift_panel(const PanelDataset& aux, const LearnerSpec& spec,
                                     std::uint64_t seed);

// (T - lambda) Y / (lambda (1 - lambda)); the period-contrast outcome.
double transformed_outcome(double y, int period, double lambda) noexcept;

// E[(T - lambda) Y / (lambda (1 - lambda)) | X, D=0] from the control rows.
RegressorPtr fit_control_drift_rcs(const RcsDataset& aux, double lambda_hat,
                                   const LearnerSpec& spec, std::uint64_t seed);

// Share of post-period rows.
double estimate_lambda(std::span<const int> period);

// Strategy that produces the per-fold nuisances from an auxiliary sample.
class NuisanceFitter {
 public:
  virtual ~NuisanceFitter() = default;
  virtual FoldNuisances fit_panel(const PanelDataset& aux, const DoseGrid& grid,
                                  const KernelSpec& kernel, std::uint64_t seed) const = 0;
  virtual FoldNuisances fit_rcs(const RcsDataset& aux, const DoseGrid& grid,
                                const KernelSpec& kernel, std::uint64_t seed) const = 0;
};

// Fits every nuisance with the configured learner; roles and grid points
// are fitted in parallel with structurally derived seeds.
class LearnerNuisanceFitter final : public NuisanceFitter {
 public:
  explicit LearnerNuisanceFitter(LearnerSpec spec, NuisanceSettings settings = {});

  FoldNuisances fit_panel(const PanelDataset& aux, const DoseGrid& grid, const KernelSpec& kernel,
                          std::uint64_t seed) const override;
  FoldNuisances fit_rcs(const RcsDataset& aux, const DoseGrid& grid, const KernelSpec& kernel,
                        std::uint64_t seed) const override;

  const LearnerSpec& spec() const noexcept { return spec_; }
  const NuisanceSettings& settings() const noexcept { return settings_; }

 private:
  LearnerSpec spec_;
  NuisanceSettings settings_;
};

}  // namespace cdid
