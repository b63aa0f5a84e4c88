#include "cdid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cdid/csv.hpp"
#include "cdid/error.hpp"

namespace cdid {

namespace {

using nlohmann::json;

constexpr std::size_t kFastTrees = 100;
constexpr std::size_t kDeskReps = 200;
constexpr std::size_t kFastReps = 100;
constexpr std::size_t kBandBoot = 1000;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::vector<std::string> covariate_list(const std::map<std::string, std::string>& schema) {
  const auto it = schema.find("covariates");
  if (it == schema.end() || it->second.empty() || it->second == "*") return {};
  std::vector<std::string> out;
  for (const auto& name : split(it->second, '+')) {
    const std::string t = trim(name);
    if (t.empty()) throw ConfigError("empty covariate name in schema");
    out.push_back(t);
  }
  return out;
}

void check_schema_keys(const std::map<std::string, std::string>& schema,
                       const std::set<std::string>& allowed, const char* design) {
  for (const auto& [key, value] : schema) {
    if (!allowed.contains(key)) {
      throw ConfigError("schema key '" + key + "' is not valid for the " + design + " design");
    }
  }
}

}  // namespace

const char* to_string(Command command) {
  switch (command) {
    case Command::Estimate: return "estimate";
    case Command::Band: return "band";
    case Command::Simulate: return "simulate";
    case Command::Probe: return "probe";
  }
  return "estimate";
}

Command command_from_string(const std::string& name) {
  if (name == "estimate") return Command::Estimate;
  if (name == "band") return Command::Band;
  if (name == "simulate") return Command::Simulate;
  if (name == "probe") return Command::Probe;
  throw ConfigError("unknown command '" + name + "'");
}

LearnerSpec RunConfig::effective_learner() const {
  LearnerSpec spec = learner;
  if (fast) spec.forest.n_trees = std::min(spec.forest.n_trees, kFastTrees);
  return spec;
}

std::size_t RunConfig::effective_reps() const {
  return n_reps.value_or(fast ? kFastReps : kDeskReps);
}

std::size_t RunConfig::effective_boot() const {
  return n_boot.value_or(kBandBoot);
}

PanelSchema RunConfig::panel_schema() const {
  check_schema_keys(schema, {"y_pre", "y_post", "dose", "covariates"}, "panel");
  PanelSchema s;
  if (auto it = schema.find("y_pre"); it != schema.end()) s.y_pre = it->second;
  if (auto it = schema.find("y_post"); it != schema.end()) s.y_post = it->second;
  if (auto it = schema.find("dose"); it != schema.end()) s.dose = it->second;
  s.covariates = covariate_list(schema);
  return s;
}

RcsSchema RunConfig::rcs_schema() const {
  check_schema_keys(schema, {"y", "period", "dose", "covariates"}, "rcs");
  RcsSchema s;
  if (auto it = schema.find("y"); it != schema.end()) s.y = it->second;
  if (auto it = schema.find("period"); it != schema.end()) s.period = it->second;
  if (auto it = schema.find("dose"); it != schema.end()) s.dose = it->second;
  s.covariates = covariate_list(schema);
  return s;
}

json to_json(const LearnerSpec& spec) {
  return json{{"kind", to_string(spec.kind)},
              {"n_trees", spec.forest.n_trees},
              {"max_depth", spec.forest.max_depth},
              {"min_leaf", spec.forest.min_leaf},
              {"mtry", spec.forest.mtry},
              {"ridge_penalty", spec.ridge_penalty}};
}

LearnerSpec learner_from_json(const json& j, LearnerSpec base) {
  if (!j.is_object()) throw ConfigError("learner config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") base.kind = learner_kind_from_string(get<std::string>(j, "kind"));
    else if (key == "n_trees") base.forest.n_trees = get<std::size_t>(j, "n_trees");
    else if (key == "max_depth") base.forest.max_depth = get<std::size_t>(j, "max_depth");
    else if (key == "min_leaf") base.forest.min_leaf = get<std::size_t>(j, "min_leaf");
    else if (key == "mtry") base.forest.mtry = get<std::size_t>(j, "mtry");
    else if (key == "ridge_penalty") base.ridge_penalty = get<double>(j, "ridge_penalty");
    else throw ConfigError("unknown learner config key '" + key + "'");
  }
  return base;
}

json to_json(const RunConfig& c) {
  json j{{"command", to_string(c.command)},
         {"design", to_string(c.design)},
         {"input", c.input},
         {"schema", c.schema},
         {"grid_points", c.grid_points},
         {"trim", c.trim},
         {"doses", c.doses},
         {"k_folds", c.k_folds},
         {"learner", to_json(c.learner)},
         {"kernel", to_string(c.kernel)},
         {"bandwidth", c.bandwidth ? json(*c.bandwidth) : json(nullptr)},
         {"alpha", c.alpha},
         {"n_boot", c.n_boot ? json(*c.n_boot) : json(nullptr)},
         {"seed", c.seed},
         {"out", c.out},
         {"fast", c.fast},
         {"threads", c.threads},
         {"n", c.n},
         {"n_reps", c.n_reps ? json(*c.n_reps) : json(nullptr)},
         {"target_dose", c.target_dose},
         {"histogram_bins", c.histogram_bins},
         {"dose_scale", to_string(c.dose_scale)},
         {"estimator", c.estimator},
         {"r_values", c.r_values},
         {"h_values", c.h_values},
         {"probe_bandwidth", c.probe_bandwidth}};
  return j;
}

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "command") c.command = command_from_string(get<std::string>(j, k));
    else if (key == "design") c.design = design_from_string(get<std::string>(j, k));
    else if (key == "input") c.input = get<std::string>(j, k);
    else if (key == "schema") c.schema = get<std::map<std::string, std::string>>(j, k);
    else if (key == "grid_points") c.grid_points = get<std::size_t>(j, k);
    else if (key == "trim") c.trim = get<double>(j, k);
    else if (key == "doses") c.doses = get<std::vector<double>>(j, k);
    else if (key == "k_folds") c.k_folds = get<std::size_t>(j, k);
    else if (key == "learner") c.learner = learner_from_json(value, c.learner);
    else if (key == "kernel") c.kernel = kernel_family_from_string(get<std::string>(j, k));
    else if (key == "bandwidth") {
      if (value.is_null()) c.bandwidth.reset();
      else c.bandwidth = get<double>(j, k);
    } else if (key == "alpha") c.alpha = get<double>(j, k);
    else if (key == "n_boot") {
      if (value.is_null()) c.n_boot.reset();
      else c.n_boot = get<std::size_t>(j, k);
    } else if (key == "seed") c.seed = get<std::uint64_t>(j, k);
    else if (key == "out") c.out = get<std::string>(j, k);
    else if (key == "fast") c.fast = get<bool>(j, k);
    else if (key == "threads") c.threads = get<std::size_t>(j, k);
    else if (key == "n") c.n = get<std::size_t>(j, k);
    else if (key == "n_reps") {
      if (value.is_null()) c.n_reps.reset();
      else c.n_reps = get<std::size_t>(j, k);
    } else if (key == "target_dose") c.target_dose = get<double>(j, k);
    else if (key == "histogram_bins") c.histogram_bins = get<std::size_t>(j, k);
    else if (key == "dose_scale") c.dose_scale = dose_scale_from_string(get<std::string>(j, k));
    else if (key == "estimator") c.estimator = get<std::string>(j, k);
    else if (key == "r_values") c.r_values = get<std::vector<double>>(j, k);
    else if (key == "h_values") c.h_values = get<std::vector<double>>(j, k);
    else if (key == "probe_bandwidth") c.probe_bandwidth = get<double>(j, k);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path.string());
  out << to_json(config).dump(2) << '\n';
}

std::map<std::string, std::string> parse_schema(const std::string& text) {
  std::map<std::string, std::string> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("schema entry '" + item + "' is not of the form role=column");
    }
    const std::string role = trim(item.substr(0, eq));
    const std::string column = trim(item.substr(eq + 1));
    if (role.empty()) throw ConfigError("schema entry '" + item + "' has an empty role");
    if (column.empty() && role != "covariates") {
      throw ConfigError("schema entry '" + item + "' has an empty column name");
    }
    out[role] = column;
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    const auto value = parse_double(trim(item));
    if (!value) throw ConfigError("'" + item + "' is not a number");
    out.push_back(*value);
  }
  return out;
}

}  // namespace cdid
