#include <string>

#include "cdid/config.hpp"
#include "cdid/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cdid;

TEST_CASE("config json round trip") {
  RunConfig c;
  c.command = Command::Band;
  c.design = Design::Rcs;
  c.input = "data.csv";
  c.schema = {{"y", "outcome"}, {"covariates", "a+b"}};
  c.doses = {0.5, 1.0};
  c.learner.kind = LearnerKind::Ridge;
  c.learner.ridge_penalty = 3.5;
  c.learner.forest.mtry = 7;
  c.kernel = KernelFamily::Epanechnikov;
  c.bandwidth = 0.25;
  c.n_boot = 300;
  c.seed = 123456789012345ULL;
  c.n_reps = 50;
  c.dose_scale = DoseScale::Rate;
  c.r_values = {0.1, 0.05};
  const RunConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.seed == 123456789012345ULL);
  CHECK(back.bandwidth == 0.25);
  CHECK(back.learner.forest.mtry == 7);

  TempDir dir;
  save_config(dir.file("c.json"), c);
  CHECK(to_json(load_config(dir.file("c.json"))) == to_json(c));
}

TEST_CASE("config keys") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"bandwith", 0.2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"learner", {{"trees", 5}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", "high"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
  const RunConfig partial = config_from_json(nlohmann::json{{"k_folds", 3}, {"bandwidth", nullptr}});
  CHECK(partial.k_folds == 3);
  CHECK_FALSE(partial.bandwidth.has_value());
  CHECK(partial.alpha == 0.05);

  TempDir dir;
  dir.write("bad.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir.file("bad.json")), ConfigError);
  CHECK_THROWS_AS(load_config(dir.file("missing.json")), ConfigError);
}

TEST_CASE("effective defaults") {
  RunConfig c;
  CHECK(c.effective_learner().forest.n_trees == 200);
  CHECK(c.effective_reps() == 200);
  CHECK(c.effective_boot() == 1000);
  c.fast = true;
  CHECK(c.effective_learner().forest.n_trees == 100);
  CHECK(c.effective_reps() == 100);
  c.learner.forest.n_trees = 30;
  CHECK(c.effective_learner().forest.n_trees == 30);
  c.n_reps = 7;
  CHECK(c.effective_reps() == 7);
}

TEST_CASE("schema parsing") {
  const auto s = parse_schema("y_pre=a, y_post=b,dose=treat,covariates=x1+x2");
  CHECK(s.at("y_pre") == "a");
  CHECK(s.at("dose") == "treat");
  RunConfig c;
  c.schema = s;
  const PanelSchema ps = c.panel_schema();
  CHECK(ps.y_post == "b");
  CHECK(ps.covariates == std::vector<std::string>{"x1", "x2"});
  CHECK_THROWS_AS(c.rcs_schema(), ConfigError);
  CHECK(parse_schema("").empty());
  CHECK_THROWS_AS(parse_schema("y_pre"), ConfigError);
  CHECK_THROWS_AS(parse_schema("=a"), ConfigError);
  c.schema = parse_schema("covariates=*");
  CHECK(c.panel_schema().covariates.empty());
}

TEST_CASE("number lists") {
  CHECK(parse_number_list("0.5, 1,2e-1") == std::vector<double>{0.5, 1.0, 0.2});
  CHECK_THROWS_AS(parse_number_list("0.5,x"), ConfigError);
  CHECK_THROWS_AS(parse_number_list("0.5,"), ConfigError);
}

TEST_CASE("command names") {
  for (auto cmd : {Command::Estimate, Command::Band, Command::Simulate, Command::Probe}) {
    CHECK(command_from_string(to_string(cmd)) == cmd);
  }
  CHECK_THROWS_AS(command_from_string("fit"), ConfigError);
}
