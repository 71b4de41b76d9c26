// Command-line driver: declarative configs in, CSV/SVG artifacts and a
// machine-readable pass/fail report out.  Exit codes: 0 all assertions pass,
// 1 assertion failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ros/config.hpp"
#include "ros/csv.hpp"
#include "ros/experiments.hpp"

namespace {

int report_config_errors(const std::vector<ros::ConfigError>& errors) {
  for (const auto& err : errors)
    std::fprintf(stderr, "config error: line %d field %s: %s\n", err.line,
                 err.field.empty() ? "-" : err.field.c_str(),
                 err.message.c_str());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random open interval-map experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool have_seed = false, strict = false;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config file");
  app.add_option("--out", out_dir, "artifact output directory");
  app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    have_seed = true;
  });
  app.add_option("--threads", threads, "worker thread override");
  app.add_flag("--strict", strict, "treat warnings as failures");

  const std::vector<std::string> kStages = {
      "assumptions", "thermo",  "theta", "gumbel",        "hitting",
      "clt",         "ldp",     "borel-cantelli", "matrix-check"};
  for (const std::string& s : kStages) app.add_subcommand(s)->fallthrough();
  int example_index = 0;
  CLI::App* example = app.add_subcommand("example", "run a preset end to end");
  example->fallthrough();
  example->add_option("index", example_index, "preset index")
      ->required()
      ->check(CLI::Range(1, 4));

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();

  std::vector<ros::ConfigError> errors;
  ros::Config cfg;
  if (!config_path.empty()) {
    cfg = ros::Config::load(config_path, errors);
  } else if (cmd == "example") {
    cfg = ros::Config::parse(ros::preset_config_text(example_index), errors);
  } else if (cmd != "matrix-check") {
    cfg = ros::Config::parse(ros::preset_config_text(1), errors);
  }
  if (!errors.empty()) return report_config_errors(errors);

  if (have_seed) cfg.set("run", "seed", std::to_string(seed));
  if (threads > 0) cfg.set("run", "threads", std::to_string(threads));
  if (!out_dir.empty()) cfg.set("run", "out", out_dir);

  ros::Experiment exp = ros::build_experiment(cfg, errors);
  if (!errors.empty()) return report_config_errors(errors);

  if (!exp.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(exp.out_dir, ec);
    if (ec) {
      std::fprintf(stderr, "config error: line 0 field run.out: %s\n",
                   ec.message().c_str());
      return 2;
    }
    ros::write_file_atomic(exp.out_dir + "/config.resolved", cfg.serialize());
  }

  std::vector<std::string> stages;
  if (cmd == "example") {
    stages = exp.stages;
    if (stages.empty()) stages = {"theta"};
  } else {
    stages = {cmd};
  }

  bool failed = false;
  for (const std::string& name : stages) {
    ros::StageResult res = ros::run_stage(exp, name);
    for (const std::string& n : res.notes)
      std::printf("note %s: %s\n", res.name.c_str(), n.c_str());
    for (const std::string& w : res.warnings) {
      std::printf("warning %s: %s\n", res.name.c_str(), w.c_str());
      if (strict) {
        std::printf("FAIL %s (strict warning)\n", w.c_str());
        failed = true;
      }
    }
    for (const std::string& f : res.failures) std::printf("FAIL %s\n", f.c_str());
    if (res.pass())
      std::printf("PASS %s\n", res.name.c_str());
    else
      failed = true;
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
