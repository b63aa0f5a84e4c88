#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cdid/commands.hpp"
#include "cdid/config.hpp"
#include "cdid/error.hpp"

namespace {

using namespace cdid;

// Raw flag values; only flags present on the command line override the
// config file.
struct Flags {
  std::string config, dump_config;
  std::string design, input, schema, doses, learner, kernel, out, dose_scale, estimator;
  std::string r_values, h_values;
  std::size_t grid_points = 0, k_folds = 0, n_boot = 0, threads = 0, n = 0, reps = 0, bins = 0;
  std::size_t trees = 0, max_depth = 0, min_leaf = 0, mtry = 0;
  double trim = 0.0, bandwidth = 0.0, alpha = 0.0, target_dose = 0.0, probe_bandwidth = 0.0;
  double ridge_penalty = 0.0;
  std::uint64_t seed = 0;
  bool fast = false;
};

struct Registered {
  CLI::App* app;
  Command command;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its values");
  sub->add_option("--dump-config", f.dump_config, "Write the effective config to a file and exit");
  sub->add_option("--design", f.design, "panel or rcs");
  sub->add_option("--kernel", f.kernel, "gaussian or epanechnikov");
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--threads", f.threads, "Worker thread cap (0 = all cores)");
  sub->add_option("--alpha", f.alpha, "Significance level");
  sub->add_flag("--fast", f.fast, "Desk-scale settings (100 trees, 100 replications)");
}

void add_estimation(CLI::App* sub, Flags& f) {
  sub->add_option("--input", f.input, "Input CSV");
  sub->add_option("--schema", f.schema, "Column map, e.g. y_pre=a,y_post=b,dose=d,covariates=x1+x2");
  sub->add_option("--grid-points", f.grid_points, "Number of grid doses");
  sub->add_option("--trim", f.trim, "Quantile trim for the grid range");
  sub->add_option("--doses", f.doses, "Explicit comma-separated grid doses");
  sub->add_option("--k-folds", f.k_folds, "Cross-fitting folds");
  sub->add_option("--learner", f.learner, "random_forest, ridge or logistic");
  sub->add_option("--trees", f.trees, "Trees per forest");
  sub->add_option("--max-depth", f.max_depth, "Maximum tree depth");
  sub->add_option("--min-leaf", f.min_leaf, "Minimum samples per leaf");
  sub->add_option("--mtry", f.mtry, "Candidate features per split (0 = p / 3)");
  sub->add_option("--ridge-penalty", f.ridge_penalty, "Ridge / logistic penalty");
  sub->add_option("--bandwidth", f.bandwidth, "Kernel bandwidth (default: rule of thumb)");
  sub->add_option("--n-boot", f.n_boot, "Bootstrap replicates");
}

bool given(const CLI::App* sub, const char* name) { return sub->count(name) > 0; }

RunConfig build_config(const CLI::App* sub, Command command, const Flags& f) {
  RunConfig c;
  if (given(sub, "--config")) c = load_config(f.config);
  c.command = command;
  if (given(sub, "--design")) c.design = design_from_string(f.design);
  if (given(sub, "--kernel")) c.kernel = kernel_family_from_string(f.kernel);
  if (given(sub, "--seed")) c.seed = f.seed;
  if (given(sub, "--out")) c.out = f.out;
  if (given(sub, "--threads")) c.threads = f.threads;
  if (given(sub, "--alpha")) c.alpha = f.alpha;
  if (given(sub, "--fast")) c.fast = f.fast;
  auto opt = [&](const char* name) { return sub->get_option_no_throw(name) && given(sub, name); };
  if (opt("--input")) c.input = f.input;
  if (opt("--schema")) c.schema = parse_schema(f.schema);
  if (opt("--grid-points")) c.grid_points = f.grid_points;
  if (opt("--trim")) c.trim = f.trim;
  if (opt("--doses")) c.doses = parse_number_list(f.doses);
  if (opt("--k-folds")) c.k_folds = f.k_folds;
  if (opt("--learner")) c.learner.kind = learner_kind_from_string(f.learner);
  if (opt("--trees")) c.learner.forest.n_trees = f.trees;
  if (opt("--max-depth")) c.learner.forest.max_depth = f.max_depth;
  if (opt("--min-leaf")) c.learner.forest.min_leaf = f.min_leaf;
  if (opt("--mtry")) c.learner.forest.mtry = f.mtry;
  if (opt("--ridge-penalty")) c.learner.ridge_penalty = f.ridge_penalty;
  if (opt("--bandwidth")) c.bandwidth = f.bandwidth;
  if (opt("--n-boot")) c.n_boot = f.n_boot;
  if (opt("--n")) c.n = f.n;
  if (opt("--reps")) c.n_reps = f.reps;
  if (opt("--target-dose")) c.target_dose = f.target_dose;
  if (opt("--bins")) c.histogram_bins = f.bins;
  if (opt("--dose-scale")) c.dose_scale = dose_scale_from_string(f.dose_scale);
  if (opt("--estimator")) c.estimator = f.estimator;
  if (opt("--r-values")) c.r_values = parse_number_list(f.r_values);
  if (opt("--h-values")) c.h_values = parse_number_list(f.h_values);
  if (opt("--probe-bandwidth")) c.probe_bandwidth = f.probe_bandwidth;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-fitted difference-in-differences estimation for continuous treatments"};
  app.require_subcommand(1);
  Flags f;

  auto* estimate = app.add_subcommand("estimate", "Estimate ATT(d) on a dose grid");
  add_common(estimate, f);
  add_estimation(estimate, f);

  auto* band = app.add_subcommand("band", "Estimate ATT(d) with a uniform confidence band");
  add_common(band, f);
  add_estimation(band, f);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study on the simulation design");
  add_common(simulate, f);
  add_estimation(simulate, f);
  simulate->add_option("--n", f.n, "Sample size per replication");
  simulate->add_option("--reps", f.reps, "Replications (default 200, 100 with --fast)");
  simulate->add_option("--target-dose", f.target_dose, "Dose at which ATT is estimated");
  simulate->add_option("--bins", f.bins, "Histogram bins");
  simulate->add_option("--dose-scale", f.dose_scale, "Exponential dose parameter: mean or rate");
  simulate->add_option("--estimator", f.estimator, "dml, or truth for a stub");

  auto* probe = app.add_subcommand("probe", "Orthogonality and bias-rate checks on a toy model");
  add_common(probe, f);
  probe->add_option("--r-values", f.r_values, "Comma-separated perturbation scales");
  probe->add_option("--h-values", f.h_values, "Comma-separated bandwidths");
  probe->add_option("--probe-bandwidth", f.probe_bandwidth, "Bandwidth of the orthogonality probe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const Registered subs[] = {{estimate, Command::Estimate},
                             {band, Command::Band},
                             {simulate, Command::Simulate},
                             {probe, Command::Probe}};
  for (const auto& [sub, command] : subs) {
    if (!sub->parsed()) continue;
    RunConfig config;
    try {
      config = build_config(sub, command, f);
      if (given(sub, "--dump-config")) {
        save_config(f.dump_config, config);
        return kExitOk;
      }
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
    return run_command(config, std::cout, std::cerr);
  }
  return kExitConfig;
}
