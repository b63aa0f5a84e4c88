#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "cdid/dataset.hpp"
#include "cdid/kernel.hpp"
#include "cdid/learner.hpp"
#include "cdid/nuisance.hpp"

namespace cdid {

// How the treated dose is drawn given s = |X'alpha + V|.
enum class DoseScale { Mean, Rate };

const char* to_string(DoseScale scale);
DoseScale dose_scale_from_string(const std::string& name);

// Simulation design: correlated Gaussian covariates, logistic control
// propensity, exponential treated doses and ATT(d) = effect_coef * d^2.
struct DgpSpec {
  std::size_t p = 100;
  double rho = 0.1;
  double gamma_scale = 0.5;    // gamma_j = gamma_scale / j^2
  double alpha_scale = 0.3;    // alpha_j = alpha_scale / j^2
  double beta_scale = 0.5;     // beta_j = beta_scale / j for j <= beta_terms
  std::size_t beta_terms = 6;
  double drift_intercept = 1.0;
  double effect_coef = -0.5;
  double lambda_t = 0.5;       // P(T = 1) in repeated cross-sections
  DoseScale dose_scale = DoseScale::Mean;

  void validate() const;
  std::vector<double> gamma() const;
  std::vector<double> alpha() const;
  std::vector<double> beta() const;
};

PanelDataset generate_panel(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

// Same per-row draws as generate_panel with the same seed, plus a period
// indicator: rows with T = 0 carry the panel's y_pre, rows with T = 1 its y_post.
RcsDataset generate_rcs(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

double true_att(const DgpSpec& spec, double d);

using SimulatedData = std::variant<PanelDataset, RcsDataset>;

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;
};

// Replication hook: estimate ATT at the target dose on one simulated sample.
using McEstimator =
    std::function<McEstimate(const SimulatedData& data, double target_dose, std::uint64_t seed)>;

struct McConfig {
  Design design = Design::Panel;
  DgpSpec dgp;
  std::size_t n = 2000;
  std::size_t n_reps = 200;
  double target_dose = 0.9;
  std::size_t k_folds = 5;
  LearnerSpec learners;
  KernelFamily kernel = KernelFamily::Gaussian;
  std::optional<double> bandwidth;  // rule of thumb when empty
  double alpha = 0.05;
  NuisanceSettings nuisance;
  std::uint64_t seed = 0;
};

struct McReplication {
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct McSummary {
  double bias = 0.0;
  double std = 0.0;   // n_reps - 1 denominator
  double rmse = 0.0;  // sqrt(bias^2 + std^2 (n_reps - 1) / n_reps)
  double avse = 0.0;
  double coverage = 0.0;
  double coverage_lo = 0.0;  // 95% normal interval for the coverage rate
  double coverage_hi = 0.0;
  std::size_t n_reps = 0;
  double target_dose = 0.0;
  double truth = 0.0;
};

struct McResult {
  std::vector<McReplication> replications;
  McSummary summary;
};

// Cross-fitted estimator at a single dose using the configured learners,
// kernel and bandwidth rule.
McEstimator dml_estimator(const McConfig& config);

// Replication r simulates with derive_seed(seed, {r, 0}) and estimates with
// derive_seed(seed, {r, 1}); replications run in parallel.
McResult run_monte_carlo(const McConfig& config, const McEstimator& estimator);
McResult run_monte_carlo(const McConfig& config);

McSummary summarize_replications(std::span<const McReplication> reps, double truth,
                                 double target_dose);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double density = 0.0;  // count / (n * width)
};

// Equal-width bins over [min, max] of the values; the last bin is closed.
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t n_bins);

}  // namespace cdid
