#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cdid/dataset.hpp"
#include "cdid/kernel.hpp"
#include "cdid/learner.hpp"
#include "cdid/simulation.hpp"

namespace cdid {

enum class Command { Estimate, Band, Simulate, Probe };

const char* to_string(Command command);
Command command_from_string(const std::string& name);

// Everything a CLI run depends on. Serializes to JSON; flags given on the
// command line override values read from a config file.
struct RunConfig {
  Command command = Command::Estimate;
  Design design = Design::Panel;
  std::string input;
  // Role -> column name: y_pre, y_post, dose (panel); y, period, dose (rcs);
  // covariates as a '+'-separated list, empty for all remaining columns.
  std::map<std::string, std::string> schema;
  std::size_t grid_points = kDefaultGridPoints;
  double trim = kDefaultGridTrim;
  std::vector<double> doses;  // explicit grid, overrides grid_points/trim
  std::size_t k_folds = 5;
  LearnerSpec learner;
  KernelFamily kernel = KernelFamily::Gaussian;
  std::optional<double> bandwidth;
  double alpha = 0.05;
  std::optional<std::size_t> n_boot;  // 1000 when unset
  std::uint64_t seed = 0;
  std::string out = "out";
  bool fast = false;
  std::size_t threads = 0;  // 0 = all hardware threads

  // simulate
  std::size_t n = 2000;
  std::optional<std::size_t> n_reps;  // 200, or 100 with --fast
  double target_dose = 0.9;
  std::size_t histogram_bins = 30;
  DoseScale dose_scale = DoseScale::Mean;
  // "dml", or "truth" for a stub that reports the true ATT with se = 1.
  std::string estimator = "dml";

  // probe
  std::vector<double> r_values;  // empty selects the default sequence
  std::vector<double> h_values;
  double probe_bandwidth = 0.2;

  // Effective values after defaults and --fast are applied.
  LearnerSpec effective_learner() const;
  std::size_t effective_reps() const;
  std::size_t effective_boot() const;

  PanelSchema panel_schema() const;
  RcsSchema rcs_schema() const;
};

nlohmann::json to_json(const RunConfig& config);
// Keys missing from the JSON keep their values in `base`; unknown keys are
// a ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void save_config(const std::filesystem::path& path, const RunConfig& config);

// "y_pre=a,y_post=b,dose=c,covariates=x1+x2".
std::map<std::string, std::string> parse_schema(const std::string& text);
std::vector<double> parse_number_list(const std::string& text);

nlohmann::json to_json(const LearnerSpec& spec);
LearnerSpec learner_from_json(const nlohmann::json& j, LearnerSpec base = {});

}  // namespace cdid
