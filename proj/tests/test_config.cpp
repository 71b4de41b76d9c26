#include <string>
#include <vector>

#include "doctest.h"
#include "ros/config.hpp"
#include "ros/experiments.hpp"

using namespace ros;

namespace {

const char* kSample =
    "# leading comment\n"
    "\n"
    "[run]\n"
    "grid = 512\n"
    "seed = 9\n"
    "\n"
    "[map]\n"
    "family = three_branch\n"
    "s = 2,3\n"
    "flag = true\n";

}  // namespace

TEST_CASE("parsing round-trips byte for byte") {
  std::vector<ConfigError> errors;
  Config cfg = Config::parse(kSample, errors);
  CHECK(errors.empty());
  CHECK(cfg.serialize() == kSample);
  // A second round trip through the serialized text is also the identity.
  Config again = Config::parse(cfg.serialize(), errors);
  CHECK(errors.empty());
  CHECK(again.serialize() == kSample);
}

TEST_CASE("typed accessors and fallbacks") {
  std::vector<ConfigError> errors;
  Config cfg = Config::parse(kSample, errors);
  REQUIRE(errors.empty());
  CHECK(cfg.get_int("run", "grid", 0) == 512);
  CHECK(cfg.get_u64("run", "seed", 0) == 9);
  CHECK(cfg.get_double("run", "absent", 2.5) == 2.5);
  CHECK(cfg.get("map", "family") == "three_branch");
  CHECK(cfg.get_bool("map", "flag", false));
  std::vector<double> s = cfg.get_list("map", "s");
  REQUIRE(s.size() == 2);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 3.0);
  CHECK(cfg.has("run", "grid"));
  CHECK_FALSE(cfg.has("run", "nope"));
  CHECK(cfg.line_of("run", "grid") == 4);
  CHECK(cfg.line_of("map", "family") == 8);
}

TEST_CASE("malformed lines are reported with their line number") {
  std::vector<ConfigError> errors;
  Config::parse("[run]\ngrid\n", errors);
  REQUIRE_FALSE(errors.empty());
  CHECK(errors[0].line == 2);
}

TEST_CASE("updates keep every untouched line verbatim") {
  std::vector<ConfigError> errors;
  Config cfg = Config::parse(kSample, errors);
  cfg.set("run", "grid", "1024");
  std::string out = cfg.serialize();
  CHECK(out.find("grid = 1024") != std::string::npos);
  CHECK(out.find("# leading comment") != std::string::npos);
  CHECK(out.find("s = 2,3") != std::string::npos);
  CHECK(cfg.get_int("run", "grid", 0) == 1024);
  // Setting a key in a new section appends rather than corrupting.
  cfg.set("assert", "theta", "0.5");
  CHECK(cfg.get_double("assert", "theta", 0.0) == 0.5);
}

TEST_CASE("experiment validation pinpoints offending fields") {
  std::vector<ConfigError> errors;
  Config bad = Config::parse("[run]\ngrid = -4\n", errors);
  REQUIRE(errors.empty());
  build_experiment(bad, errors);
  REQUIRE_FALSE(errors.empty());
  CHECK(errors[0].field == "run.grid");
  CHECK(errors[0].line == 2);

  errors.clear();
  Config fam = Config::parse("[map]\nfamily = quintupling\n", errors);
  build_experiment(fam, errors);
  REQUIRE_FALSE(errors.empty());
  CHECK(errors[0].field == "map.family");

  errors.clear();
  Config lad = Config::parse("[schedule]\nN_ladder = 100,100\n", errors);
  build_experiment(lad, errors);
  REQUIRE_FALSE(errors.empty());
  CHECK(errors[0].field == "schedule.N_ladder");
}

TEST_CASE("every shipped preset parses, validates and round-trips") {
  for (int which = 1; which <= 4; ++which) {
    std::vector<ConfigError> errors;
    std::string text = preset_config_text(which);
    Config cfg = Config::parse(text, errors);
    CHECK(errors.empty());
    CHECK(cfg.serialize() == text);
    Experiment e = build_experiment(cfg, errors);
    CHECK(errors.empty());
    CHECK(e.driving.has_value());
    CHECK_FALSE(e.stages.empty());
  }
  CHECK_THROWS_AS(preset_config_text(5), std::invalid_argument);
}
