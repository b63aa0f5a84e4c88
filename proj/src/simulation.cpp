#include "cdid/simulation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "cdid/error.hpp"
#include "cdid/estimator.hpp"
#include "cdid/inference.hpp"
#include "cdid/parallel.hpp"
#include "cdid/random.hpp"
#include "cdid/summation.hpp"

namespace cdid {

namespace {

struct SimulatedRow {
  double y_pre = 0.0;
  double y_post = 0.0;
  double dose = 0.0;
  int period = 0;
};

class RowGenerator {
 public:
  explicit RowGenerator(const DgpSpec& spec)
      : spec_(spec), gamma_(spec.gamma()), alpha_(spec.alpha()), beta_(spec.beta()) {
    spec.validate();
    const auto p = static_cast<Eigen::Index>(spec.p);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p, p, spec.rho);
    sigma.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw ConfigError("covariate covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  // Draw order per row: p standard normals, control uniform, V (redrawn
  // while |X'alpha + V| < 1e-8), dose, eps1, eps2, eps3, period.
  SimulatedRow draw(std::uint64_t row_seed, std::span<double> x) const {
    Rng rng(row_seed);
    const std::size_t p = spec_.p;
    Eigen::VectorXd z(static_cast<Eigen::Index>(p));
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    const Eigen::VectorXd xv = chol_.triangularView<Eigen::Lower>() * z;
    for (std::size_t k = 0; k < p; ++k) x[k] = xv[static_cast<Eigen::Index>(k)];

    const double control_prob = 1.0 / (1.0 + std::exp(-dot(x, gamma_)));
    const bool control = rng.uniform() < control_prob;
    const double index = dot(x, alpha_);
    double scale = 0.0;
    do {
      scale = std::abs(index + rng.normal());
    } while (scale < 1e-8);
    const double treated_dose =
        spec_.dose_scale == DoseScale::Mean ? rng.exponential(scale) : rng.exponential(1.0 / scale);

    const double eps1 = rng.normal();
    const double eps2 = rng.normal();
    const double eps3 = rng.normal();
    SimulatedRow row;
    row.y_pre = eps1;
    row.y_post = row.y_pre + dot(x, beta_) + spec_.drift_intercept + eps2;
    if (!control) {
      row.dose = treated_dose;
      row.y_post += spec_.effect_coef * treated_dose * treated_dose + eps3;
    }
    row.period = rng.uniform() < spec_.lambda_t ? 1 : 0;
    return row;
  }

 private:
  static double dot(std::span<const double> x, const std::vector<double>& c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) acc += x[k] * c[k];
    return acc;
  }

  const DgpSpec& spec_;
  std::vector<double> gamma_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  Eigen::MatrixXd chol_;
};

std::vector<std::string> covariate_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= p; ++k) names.push_back("x" + std::to_string(k));
  return names;
}

template <typename Consume>
void generate_rows(const DgpSpec& spec, std::size_t n, std::uint64_t seed, Matrix& x,
                   Consume&& consume) {
  if (n < 2) throw ConfigError("simulated sample needs at least 2 rows");
  const RowGenerator gen(spec);
  x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.p));
  std::vector<SimulatedRow> rows(n);
  parallel_for(n, [&](std::size_t i) {
    std::span<double> xi(x.data() + i * spec.p, spec.p);
    rows[i] = gen.draw(derive_seed(seed, {i}), xi);
  });
  for (std::size_t i = 0; i < n; ++i) consume(i, rows[i]);
}

}  // namespace

const char* to_string(DoseScale scale) { return scale == DoseScale::Mean ? "mean" : "rate"; }

DoseScale dose_scale_from_string(const std::string& name) {
  if (name == "mean") return DoseScale::Mean;
  if (name == "rate") return DoseScale::Rate;
  throw ConfigError("unknown dose scale '" + name + "' (expected mean or rate)");
}

void DgpSpec::validate() const {
  if (p == 0) throw ConfigError("covariate dimension must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  if (!(lambda_t > 0.0 && lambda_t < 1.0)) throw ConfigError("lambda_t must lie in (0, 1)");
}

std::vector<double> DgpSpec::gamma() const {
  std::vector<double> out(p);
  for (std::size_t j = 0; j < p; ++j) out[j] = gamma_scale / std::pow(static_cast<double>(j + 1), 2);
  return out;
}

std::vector<double> DgpSpec::alpha() const {
  std::vector<double> out(p);
  for (std::size_t j = 0; j < p; ++j) out[j] = alpha_scale / std::pow(static_cast<double>(j + 1), 2);
  return out;
}

std::vector<double> DgpSpec::beta() const {
  std::vector<double> out(p, 0.0);
  for (std::size_t j = 0; j < std::min(p, beta_terms); ++j) {
    out[j] = beta_scale / static_cast<double>(j + 1);
  }
  return out;
}

PanelDataset generate_panel(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
  Matrix x;
  std::vector<double> y_pre(n), y_post(n), dose(n);
  generate_rows(spec, n, seed, x, [&](std::size_t i, const SimulatedRow& row) {
    y_pre[i] = row.y_pre;
    y_post[i] = row.y_post;
    dose[i] = row.dose;
  });
  return PanelDataset(std::move(y_pre), std::move(y_post), std::move(dose), std::move(x),
                      covariate_names(spec.p));
}

RcsDataset generate_rcs(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
  Matrix x;
  std::vector<double> y(n), dose(n);
  std::vector<int> period(n);
  generate_rows(spec, n, seed, x, [&](std::size_t i, const SimulatedRow& row) {
    y[i] = row.period == 1 ? row.y_post : row.y_pre;
    period[i] = row.period;
    dose[i] = row.dose;
  });
  return RcsDataset(std::move(y), std::move(period), std::move(dose), std::move(x),
                    covariate_names(spec.p));
}

double true_att(const DgpSpec& spec, double d) {
  if (!(d >= 0.0)) throw ConfigError("dose must be nonnegative");
  return spec.effect_coef * d * d;
}

McEstimator dml_estimator(const McConfig& config) {
  return [config](const SimulatedData& data, double target_dose, std::uint64_t seed) {
    const DoseGrid grid({target_dose});
    return std::visit(
        [&](const auto& sample) {
          const double h = config.bandwidth.value_or(
              rule_of_thumb_bandwidth(positive_doses(sample.dose()), sample.size()));
          const KernelSpec kernel(h, config.kernel);
          CrossFitResult fit = [&] {
            if constexpr (std::is_same_v<std::decay_t<decltype(sample)>, PanelDataset>) {
              return estimate_att_panel(sample, grid, config.k_folds, config.learners, kernel,
                                        seed, config.nuisance);
            } else {
              return estimate_att_rcs(sample, grid, config.k_folds, config.learners, kernel, seed,
                                      config.nuisance);
            }
          }();
          const auto& point = fit.curve.estimates.front();
          return McEstimate{point.att_hat, point.se};
        },
        data);
  };
}

McResult run_monte_carlo(const McConfig& config, const McEstimator& estimator) {
  if (config.n_reps < 2) throw ConfigError("Monte Carlo needs at least 2 replications");
  const double truth = true_att(config.dgp, config.target_dose);
  std::vector<McReplication> reps(config.n_reps);
  parallel_for(config.n_reps, [&](std::size_t r) {
    const std::uint64_t data_seed = derive_seed(config.seed, {r, 0});
    const SimulatedData data =
        config.design == Design::Panel
            ? SimulatedData(generate_panel(config.dgp, config.n, data_seed))
            : SimulatedData(generate_rcs(config.dgp, config.n, data_seed));
    const McEstimate est = estimator(data, config.target_dose, derive_seed(config.seed, {r, 1}));
    const Interval ci = pointwise_ci_normal(est.estimate, est.se, config.alpha);
    reps[r] = {est.estimate, est.se, ci.lo, ci.hi};
  });
  McResult result{std::move(reps), {}};
  result.summary = summarize_replications(result.replications, truth, config.target_dose);
  return result;
}

McResult run_monte_carlo(const McConfig& config) {
  return run_monte_carlo(config, dml_estimator(config));
}

McSummary summarize_replications(std::span<const McReplication> reps, double truth,
                                 double target_dose) {
  if (reps.size() < 2) throw ConfigError("summary needs at least 2 replications");
  const auto r = static_cast<double>(reps.size());
  CompensatedSum est_sum, se_sum;
  std::size_t covered = 0;
  for (const auto& rep : reps) {
    est_sum.add(rep.estimate);
    se_sum.add(rep.se);
    if (rep.ci_lo <= truth && truth <= rep.ci_hi) ++covered;
  }
  const double mean = est_sum.value() / r;
  CompensatedSum sq;
  for (const auto& rep : reps) sq.add((rep.estimate - mean) * (rep.estimate - mean));

  McSummary s;
  s.n_reps = reps.size();
  s.target_dose = target_dose;
  s.truth = truth;
  s.bias = mean - truth;
  s.std = std::sqrt(sq.value() / (r - 1.0));
  s.rmse = std::sqrt(s.bias * s.bias + s.std * s.std * (r - 1.0) / r);
  s.avse = se_sum.value() / r;
  s.coverage = static_cast<double>(covered) / r;
  const double half = normal_quantile(0.975) * std::sqrt(s.coverage * (1.0 - s.coverage) / r);
  s.coverage_lo = std::max(0.0, s.coverage - half);
  s.coverage_hi = std::min(1.0, s.coverage + half);
  return s;
}

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t n_bins) {
  if (values.empty()) throw ConfigError("histogram of an empty sample");
  if (n_bins == 0) throw ConfigError("histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = lo + width * static_cast<double>(b);
    bins[b].hi = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    bins[std::min(b, n_bins - 1)].count += 1;
  }
  for (auto& bin : bins) {
    bin.density = static_cast<double>(bin.count) / (static_cast<double>(values.size()) * width);
  }
  return bins;
}

}  // namespace cdid
