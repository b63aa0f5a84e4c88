#include "cdid/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <variant>

#include "cdid/csv.hpp"
#include "cdid/error.hpp"
#include "cdid/estimator.hpp"
#include "cdid/inference.hpp"
#include "cdid/parallel.hpp"
#include "cdid/probes.hpp"
#include "cdid/simulation.hpp"

namespace cdid {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class OutputFile {
 public:
  OutputFile(const RunConfig& config, const std::string& name) : path_(fs::path(config.out) / name) {
    std::error_code ec;
    fs::create_directories(path_.parent_path(), ec);
    stream_.open(path_, std::ios::binary);
    if (!stream_) throw DataError(DataErrorKind::Io, "cannot write output file: " + path_.string());
  }

  std::ostream& stream() { return stream_; }
  const fs::path& path() const { return path_; }

  void row(std::initializer_list<std::string> fields) {
    const std::vector<std::string> v(fields);
    write_csv_row(stream_, v);
  }

 private:
  fs::path path_;
  std::ofstream stream_;
};

void write_json(const RunConfig& config, const std::string& name, const json& j) {
  OutputFile file(config, name);
  file.stream() << j.dump(2) << '\n';
}

std::string fmt(double value) { return format_double(value); }
std::string fmt(std::size_t value) { return std::to_string(value); }

struct Fitted {
  CrossFitResult fit;
  std::size_t n_covariates = 0;
};

template <typename Data>
Fitted fit_curve(const RunConfig& config, const Data& data, std::ostream& log) {
  const DoseGrid grid = config.doses.empty()
                            ? make_dose_grid(data, config.grid_points, config.trim)
                            : make_explicit_grid(config.doses, data.dose());
  const double h = config.bandwidth.value_or(
      rule_of_thumb_bandwidth(positive_doses(data.dose()), data.size()));
  const KernelSpec kernel(h, config.kernel);
  const LearnerSpec learner = config.effective_learner();
  CrossFitResult fit = [&] {
    if constexpr (std::is_same_v<Data, PanelDataset>) {
      return estimate_att_panel(data, grid, config.k_folds, learner, kernel, config.seed);
    } else {
      return estimate_att_rcs(data, grid, config.k_folds, learner, kernel, config.seed);
    }
  }();

  log << "design: " << to_string(config.design) << ", n = " << data.size()
      << ", covariates = " << data.n_covariates() << '\n';
  log << "bandwidth: " << fmt(h) << " (" << (config.bandwidth ? "user" : "rule of thumb") << ", "
      << to_string(config.kernel) << " kernel)\n";
  log << "fold sizes:";
  for (std::size_t s : fit.curve.folds.sizes()) log << ' ' << s;
  log << '\n';
  for (const auto& e : fit.curve.estimates) {
    log << "  d = " << fmt(e.dose) << ": n_effective = " << fmt(e.n_effective) << '\n';
  }
  return {std::move(fit), data.n_covariates()};
}

Fitted load_and_fit(const RunConfig& config, std::ostream& log) {
  if (config.input.empty()) throw ConfigError("an input CSV is required (--input)");
  if (config.design == Design::Panel) {
    return fit_curve(config, load_panel_csv(config.input, config.panel_schema()), log);
  }
  return fit_curve(config, load_rcs_csv(config.input, config.rcs_schema()), log);
}

json run_metadata(const RunConfig& config, const Fitted& fitted) {
  const auto& curve = fitted.fit.curve;
  json folds = json::array();
  for (std::size_t s : curve.folds.sizes()) folds.push_back(s);
  json grid = json::array();
  for (double d : curve.grid.points()) grid.push_back(d);
  return json{{"design", to_string(config.design)},
              {"input", fs::path(config.input).filename().string()},
              {"n", curve.n},
              {"n_covariates", fitted.n_covariates},
              {"grid", grid},
              {"bandwidth", curve.bandwidth},
              {"bandwidth_source", config.bandwidth ? "user" : "rule_of_thumb"},
              {"kernel", to_string(curve.kernel)},
              {"k_folds", curve.folds.k()},
              {"fold_sizes", folds},
              {"learner", to_json(config.effective_learner())},
              {"alpha", config.alpha},
              {"seed", config.seed}};
}

void write_curve(const RunConfig& config, const Fitted& fitted) {
  OutputFile csv(config, "curve.csv");
  csv.row({"dose", "att_hat", "se", "ci_lo", "ci_hi", "n_effective"});
  for (const auto& e : fitted.fit.curve.estimates) {
    const Interval ci = pointwise_ci_normal(e.att_hat, e.se, config.alpha);
    csv.row({fmt(e.dose), fmt(e.att_hat), fmt(e.se), fmt(ci.lo), fmt(ci.hi), fmt(e.n_effective)});
  }
  write_json(config, "curve.json", run_metadata(config, fitted));
}

void check_common(const RunConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  set_thread_limit(static_cast<unsigned>(config.threads));
}

}  // namespace

void cmd_estimate(const RunConfig& config, std::ostream& log) {
  check_common(config);
  const Fitted fitted = load_and_fit(config, log);
  write_curve(config, fitted);
  log << "wrote " << (fs::path(config.out) / "curve.csv").string() << '\n';
}

void cmd_band(const RunConfig& config, std::ostream& log) {
  check_common(config);
  const std::size_t n_boot = config.effective_boot();
  if (n_boot < kMinBootstrapDraws) {
    throw ConfigError("--n-boot must be at least " + std::to_string(kMinBootstrapDraws));
  }
  const Fitted fitted = load_and_fit(config, log);
  write_curve(config, fitted);
  const UniformBand band = uniform_band(fitted.fit, n_boot, config.alpha, config.seed);

  OutputFile csv(config, "band.csv");
  csv.row({"dose", "center", "lo_uniform", "hi_uniform", "lo_pointwise", "hi_pointwise",
           "critical_value"});
  json percentile = json::array();
  for (std::size_t j = 0; j < band.dose.size(); ++j) {
    csv.row({fmt(band.dose[j]), fmt(band.center[j]), fmt(band.lo[j]), fmt(band.hi[j]),
             fmt(band.lo_pointwise[j]), fmt(band.hi_pointwise[j]), fmt(band.critical_value)});
    percentile.push_back({{"dose", band.dose[j]},
                          {"lo", band.percentile[j].lo},
                          {"hi", band.percentile[j].hi}});
  }
  json meta = run_metadata(config, fitted);
  meta["n_boot"] = band.n_boot;
  meta["critical_value"] = band.critical_value;
  meta["pointwise_percentile_ci"] = percentile;
  write_json(config, "band.json", meta);

  log << "critical value c(1-alpha) = " << fmt(band.critical_value) << " (alpha = "
      << fmt(config.alpha) << ", B = " << n_boot << ")\n";
  if (band.dose.size() == 1) {
    const double pointwise = (band.hi_pointwise[0] - band.center[0]) / band.se[0];
    const double uniform = band.half_width[0] / band.se[0];
    log << "pointwise studentized quantile = " << fmt(pointwise) << " (equal to c: "
        << (std::abs(pointwise - uniform) <= 1e-12 * std::max(1.0, uniform) ? "yes" : "no")
        << ")\n";
  }
  log << "wrote " << (fs::path(config.out) / "band.csv").string() << '\n';
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  check_common(config);
  McConfig mc;
  mc.design = config.design;
  mc.dgp.dose_scale = config.dose_scale;
  mc.n = config.n;
  mc.n_reps = config.effective_reps();
  mc.target_dose = config.target_dose;
  mc.k_folds = config.k_folds;
  mc.learners = config.effective_learner();
  mc.kernel = config.kernel;
  mc.bandwidth = config.bandwidth;
  mc.alpha = config.alpha;
  mc.seed = config.seed;

  McEstimator estimator;
  if (config.estimator == "dml") {
    estimator = dml_estimator(mc);
  } else if (config.estimator == "truth") {
    const double truth = true_att(mc.dgp, mc.target_dose);
    estimator = [truth](const SimulatedData&, double, std::uint64_t) {
      return McEstimate{truth, 1.0};
    };
  } else {
    throw ConfigError("unknown simulation estimator '" + config.estimator + "' (dml or truth)");
  }
  if (config.histogram_bins == 0) throw ConfigError("histogram needs at least one bin");

  log << "simulating " << mc.n_reps << " replications: " << to_string(mc.design)
      << ", n = " << mc.n << ", d = " << fmt(mc.target_dose) << '\n';
  const McResult result = run_monte_carlo(mc, estimator);

  OutputFile reps(config, "replications.csv");
  reps.row({"replication", "estimate", "se", "ci_lo", "ci_hi"});
  std::vector<double> estimates;
  for (std::size_t r = 0; r < result.replications.size(); ++r) {
    const auto& rep = result.replications[r];
    reps.row({fmt(r), fmt(rep.estimate), fmt(rep.se), fmt(rep.ci_lo), fmt(rep.ci_hi)});
    estimates.push_back(rep.estimate);
  }

  OutputFile hist(config, "histogram.csv");
  hist.row({"bin_lo", "bin_hi", "count", "density"});
  for (const auto& bin : histogram(estimates, config.histogram_bins)) {
    hist.row({fmt(bin.lo), fmt(bin.hi), fmt(bin.count), fmt(bin.density)});
  }

  const McSummary& s = result.summary;
  const json summary{{"design", to_string(mc.design)},
                     {"n", mc.n},
                     {"n_reps", s.n_reps},
                     {"target_dose", s.target_dose},
                     {"truth", s.truth},
                     {"bias", s.bias},
                     {"std", s.std},
                     {"rmse", s.rmse},
                     {"avse", s.avse},
                     {"coverage", s.coverage},
                     {"coverage_ci", {s.coverage_lo, s.coverage_hi}},
                     {"estimator", config.estimator},
                     {"dose_scale", to_string(mc.dgp.dose_scale)},
                     {"learner", to_json(mc.learners)},
                     {"k_folds", mc.k_folds},
                     {"kernel", to_string(mc.kernel)},
                     {"alpha", mc.alpha},
                     {"seed", mc.seed}};
  write_json(config, "summary.json", summary);

  log << "bias " << fmt(s.bias) << ", std " << fmt(s.std) << ", rmse " << fmt(s.rmse)
      << ", avse " << fmt(s.avse) << ", coverage " << fmt(s.coverage) << '\n';
}

void cmd_probe(const RunConfig& config, std::ostream& log) {
  check_common(config);
  if (!config.r_values.empty() && config.r_values.size() < 2) {
    throw ConfigError("--r-values needs at least two perturbation scales");
  }
  if (!config.h_values.empty() && config.h_values.size() < 2) {
    throw ConfigError("--h-values needs at least two bandwidths");
  }
  const ToyModel model;
  const auto& rs = config.r_values.empty() ? kDefaultProbeR : config.r_values;
  const auto& hs = config.h_values.empty() ? kDefaultProbeH : config.h_values;
  const auto ortho =
      orthogonality_probe(model, KernelSpec(config.probe_bandwidth, config.kernel), rs);
  const auto rate = bias_rate_probe(model, config.kernel, hs);

  OutputFile ocsv(config, "orthogonality.csv");
  ocsv.row({"r", "psi_deviation", "phi_deviation", "psi_ratio", "phi_ratio"});
  for (const auto& row : ortho.rows) {
    ocsv.row({fmt(row.r), fmt(row.psi_deviation), fmt(row.phi_deviation), fmt(row.psi_ratio),
              fmt(row.phi_ratio)});
  }
  OutputFile bcsv(config, "bias_rate.csv");
  bcsv.row({"h", "bias"});
  for (const auto& row : rate.rows) bcsv.row({fmt(row.h), fmt(row.bias)});

  const json summary{{"kernel", to_string(config.kernel)},
                     {"probe_bandwidth", config.probe_bandwidth},
                     {"psi_at_zero", ortho.psi_at_zero},
                     {"psi_ratio_spread", ortho.psi_ratio_spread},
                     {"phi_ratio_spread", ortho.phi_ratio_spread},
                     {"orthogonality_pass", ortho.pass},
                     {"bias_rate_slope", rate.slope},
                     {"bias_monotone", rate.monotone},
                     {"bias_rate_pass", rate.pass}};
  write_json(config, "probe_summary.json", summary);

  std::ostringstream slope;
  slope.precision(3);
  slope << rate.slope;
  log << "orthogonality: " << (ortho.pass ? "PASS" : "FAIL")
      << ", bias-rate slope 2.0±0.3: " << (rate.pass ? "PASS" : "FAIL") << '\n';
  log << "psi ratio spread " << fmt(ortho.psi_ratio_spread) << ", phi ratio spread "
      << fmt(ortho.phi_ratio_spread) << ", slope " << slope.str() << '\n';
}

int run_command(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Estimate: cmd_estimate(config, log); break;
      case Command::Band: cmd_band(config, log); break;
      case Command::Simulate: cmd_simulate(config, log); break;
      case Command::Probe: cmd_probe(config, log); break;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace cdid
