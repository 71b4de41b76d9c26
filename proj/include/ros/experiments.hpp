#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ros/config.hpp"
#include "ros/driving.hpp"

namespace ros {

// Declarative experiment orchestration: a parsed+validated config is turned
// into a driving system plus per-symbol fiber assignments, and each stage
// builds its own sampled window, runs one family of checks, and emits CSV
// (always with a tolerance column) and SVG artifacts.

struct StageResult {
  std::string name;
  std::vector<std::string> failures;  // machine-readable, one line each
  std::vector<std::string> warnings;  // fatal under --strict
  std::vector<std::string> notes;
  bool pass() const { return failures.empty(); }
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Experiment {
  Config cfg;
  std::optional<DrivingSystem> driving;

  std::uint64_t seed = 1;
  std::size_t grid = 4096;
  std::vector<double> N_ladder;
  int k_max = 12;
  double jitter = 0.0;
  int theta_fibers = 100;
  int threads = 1;
  std::string out_dir;  // empty: no artifacts
  std::vector<std::string> stages;

  // Window [-K, N] of the base orbit at the configured seed.
  FiberPath window(std::int64_t K, std::int64_t N) const;

  // Whole configured window uses r = 1 Lebesgue-preserving maps, so the
  // exact step-function engines apply.
  bool exact_family() const;

  double cfg_double(const std::string& sec, const std::string& key,
                    double fallback) const {
    return cfg.get_double(sec, key, fallback);
  }
  bool has_assert(const std::string& key) const { return cfg.has("assert", key); }
};

// Build and validate; configuration problems are appended to `errors` (with
// line numbers where available) and leave `driving` unset.
Experiment build_experiment(const Config& cfg, std::vector<ConfigError>& errors);

// Shipped preset configs reproducing the worked examples.
std::string preset_config_text(int which);  // which in 1..4

StageResult stage_assumptions(Experiment& e);
StageResult stage_invariants(Experiment& e);
StageResult stage_theta(Experiment& e);
StageResult stage_thermo(Experiment& e);
StageResult stage_gumbel(Experiment& e);
StageResult stage_hitting(Experiment& e);
StageResult stage_clt(Experiment& e);
StageResult stage_ldp(Experiment& e);
StageResult stage_borel_cantelli(Experiment& e);
StageResult stage_matrix_check(const Config& cfg, const std::string& out_dir);

// Dispatch by stage name ("assumptions", "invariants", "theta", "thermo",
// "gumbel", "hitting", "clt", "ldp", "borel-cantelli", "matrix-check").
StageResult run_stage(Experiment& e, const std::string& name);

// Simple deterministic work partitioner for per-fiber loops.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace ros
