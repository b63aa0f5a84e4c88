#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdid/dataset.hpp"
#include "cdid/kernel.hpp"
#include "cdid/learner.hpp"
#include "cdid/nuisance.hpp"

namespace cdid {

inline constexpr std::size_t kDefaultFolds = 5;

// Partition of 0..n-1 into k folds whose sizes differ by at most one.
class FoldAssignment {
 public:
  FoldAssignment(std::vector<std::size_t> fold_of, std::size_t k);

  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return fold_of_.size(); }
  std::size_t fold_of(std::size_t i) const noexcept { return fold_of_[i]; }
  std::span<const std::size_t> fold_ids() const noexcept { return fold_of_; }

  // Ascending row indices of fold f and of its complement.
  const std::vector<std::size_t>& members(std::size_t f) const noexcept { return members_[f]; }
  std::vector<std::size_t> complement(std::size_t f) const;
  std::vector<std::size_t> sizes() const;

 private:
  std::vector<std::size_t> fold_of_;
  std::size_t k_;
  std::vector<std::vector<std::size_t>> members_;
};

// Seeded permutation of 0..n-1 dealt round-robin into k folds.
FoldAssignment assign_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Nuisance values for a single observation at a single grid point.
struct RowNuisance {
  double propensity;        // g(X_i)
  double smoothed_density;  // f_h(d|X_i)
  double drift;             // control drift at X_i
  double dose_density;      // f_D(d)
};

// (K_h(D-d) g(X) - 1{D=0} f_h(d|X)) / (f_D(d) g(X)).
double orthogonal_weight(double kernel_at_dose, bool is_control, const RowNuisance& nuis);

// Orthogonal score summand without the -ATT_h centering term; its sample
// mean is the fold estimate. Throws NumericError on a non-finite value.
double score_panel(double delta_y, double dose, double d, const RowNuisance& nuis,
                   const KernelSpec& kernel);
double score_rcs(double y, int period, double dose, double d, const RowNuisance& nuis,
                 double lambda, const KernelSpec& kernel);

// Cross-fitted score ingredients, row-aligned with the dataset. Everything
// downstream of the nuisance fits (point estimate, variance, bootstrap)
// is a function of this table.
struct ScoreTable {
  std::size_t n = 0;
  std::size_t n_grid = 0;
  FoldAssignment folds;
  std::vector<double> scores;        // [j * n + i]
  std::vector<double> kernels;       // [j * n + i] = K_h(D_i - d_j)
  std::vector<double> fold_density;  // [j * k + f] = f_D estimate of fold f at d_j

  double score(std::size_t j, std::size_t i) const noexcept { return scores[j * n + i]; }
  double kernel(std::size_t j, std::size_t i) const noexcept { return kernels[j * n + i]; }
  double density(std::size_t j, std::size_t f) const noexcept {
    return fold_density[j * folds.k() + f];
  }
};

// (1/K) sum_k mean_{i in I_k} w_i s_ij for every grid point; empty weights
// means unit weights. Compensated sums in ascending row order.
std::vector<double> fold_averaged_scores(const ScoreTable& table,
                                         std::span<const double> weights = {});

// Cross-fitted variance sigma^2_N(d) of sqrt(N)(ATT_hat(d) - ATT(d)):
// (1/K) sum_k E_{n,k}[(s - theta - theta / f_k (K_h - f_k))^2].
std::vector<double> cross_fitted_variance(const ScoreTable& table,
                                          std::span<const double> theta);

inline std::vector<double> variance_panel(const ScoreTable& table, std::span<const double> theta) {
  return cross_fitted_variance(table, theta);
}
inline std::vector<double> variance_rcs(const ScoreTable& table, std::span<const double> theta) {
  return cross_fitted_variance(table, theta);
}

struct AttPointEstimate {
  double dose = 0.0;
  double att_hat = 0.0;
  double se = 0.0;           // sigma_N(d) / sqrt(N)
  double n_effective = 0.0;  // h * sum_i K_h(D_i - d)
};

struct AttCurveEstimate {
  DoseGrid grid;
  std::vector<AttPointEstimate> estimates;
  double bandwidth = 0.0;
  KernelFamily kernel = KernelFamily::Gaussian;
  FoldAssignment folds;
  Design design = Design::Panel;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

struct CrossFitResult {
  AttCurveEstimate curve;
  ScoreTable scores;
  std::vector<FoldNuisances> nuisances;
};

// Cross-fitted estimation with a caller-supplied fold partition and
// nuisance strategy. Fold f's nuisances are fitted on its complement with
// seed derive_seed(seed, {f}).
CrossFitResult cross_fit_panel(const PanelDataset& data, const DoseGrid& grid,
                               const FoldAssignment& folds, const KernelSpec& kernel,
                               const NuisanceFitter& fitter, std::uint64_t seed);
CrossFitResult cross_fit_rcs(const RcsDataset& data, const DoseGrid& grid,
                             const FoldAssignment& folds, const KernelSpec& kernel,
                             const NuisanceFitter& fitter, std::uint64_t seed);

// Estimation with learner-fitted nuisances and seeded folds.
CrossFitResult estimate_att_panel(const PanelDataset& data, const DoseGrid& grid, std::size_t k,
                                  const LearnerSpec& learners, const KernelSpec& kernel,
                                  std::uint64_t seed, const NuisanceSettings& settings = {});
CrossFitResult estimate_att_rcs(const RcsDataset& data, const DoseGrid& grid, std::size_t k,
                                const LearnerSpec& learners, const KernelSpec& kernel,
                                std::uint64_t seed, const NuisanceSettings& settings = {});

// Sample-analog of the identification formula, no orthogonalization and
// no cross-fitting: every nuisance is fitted and evaluated on the full sample.
struct PluginCurve {
  DoseGrid grid;
  std::vector<double> att_hat;
};

PluginCurve naive_plugin_att(const PanelDataset& data, const DoseGrid& grid,
                             const KernelSpec& kernel, const NuisanceFitter& fitter,
                             std::uint64_t seed);
PluginCurve naive_plugin_att(const PanelDataset& data, const DoseGrid& grid,
                             const LearnerSpec& learners, const KernelSpec& kernel,
                             std::uint64_t seed, const NuisanceSettings& settings = {});

// Seed used for the fold permutation of a run with master seed `seed`.
std::uint64_t fold_seed(std::uint64_t seed) noexcept;

}  // namespace cdid
