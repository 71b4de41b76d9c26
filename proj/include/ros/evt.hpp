#pragma once

#include <cstdint>
#include <vector>

#include "ros/driving.hpp"
#include "ros/stepfn.hpp"
#include "ros/thermo.hpp"

namespace ros {

// Threshold schedules: each ladder rung realizes the hole {h > z} with
// measure (t + xi)/N around the observable's peak.

struct ScheduleRow {
  std::int64_t k = 0;
  int rung = 0;
  double N = 0.0;
  double z = 0.0;
  double t = 0.0;
  double xi = 0.0;
  double hole_measure = 0.0;
};

struct ThresholdReport {
  std::vector<ScheduleRow> rows;
  bool nested = true;
};

struct ScheduleOptions {
  std::vector<double> N_ladder;  // rung r targets measure t_omega / N_ladder[r]
  double measure_tol = 1e-12;
  // Relative asymmetry of the realized ball, scaled by sqrt(width) so the
  // symmetric difference from the centered ball vanishes faster than the
  // width itself (the vanishing-relative-jitter requirement).
  double jitter = 0.0;
  std::uint64_t jitter_seed = 1;
};

// Builds the hole ladder on fibers [lo, hi] (mutates Fiber::holes).  With an
// engine the thresholds come from bisection against the grid measure; without
// one every touched map must preserve Lebesgue (checked) and the ball is
// written in closed form with xi = 0.
ThresholdReport solve_thresholds(FiberPath& path, std::int64_t lo, std::int64_t hi,
                                 const ScheduleOptions& opt,
                                 ThermoEngine* eng = nullptr);

// Exact survivor mass of the open cocycle on step densities, normalized by
// the closed multipliers (valid when the closed maps preserve Lebesgue with
// r = 1, which is asserted).  mask_first=true avoids holes at times
// 0..N-1 starting at fiber k0 (the non-exceedance convention); false pushes
// first and masks at fibers k0+1..k0+N (the hitting-time convention).
double survivor_exact(const FiberPath& path, std::int64_t k0, int rung, int N,
                      bool mask_first = true, double merge_tol = 1e-13,
                      const StepFn* start = nullptr);

// Per-fiber multipliers of the open cocycle from an exact step-function
// sweep with burn-in; entry j is lambda at fiber k0+j.
std::vector<double> lambda_sequence_exact(const FiberPath& path, std::int64_t k0,
                                          int count, int rung, int burn_in = 80,
                                          double merge_tol = 1e-13);

// Conditional last-visit probabilities: qhat[kk] is the mu-probability,
// conditioned on landing in the hole at fiber k, that the previous visit to
// the hole chain was exactly kk+1 steps earlier.  Exact step-function form.
struct QhatSeries {
  std::int64_t k = 0;
  int rung = 0;
  std::vector<double> qhat;  // kk = 0 .. k_max
  double hole_measure = 0.0;
  double sum() const;
  double theta() const { return 1.0 - sum(); }
};

QhatSeries qhat_series(const FiberPath& path, std::int64_t k, int rung, int k_max);

// Grid operator form of the same series via the perturbative pairings
// (difference operator, open k-step bridge, difference operator), scaled by
// the closed multiplier products.  Cross-checks the exact form.
std::vector<double> qhat_operator_form(ThermoEngine& eng, std::int64_t k, int rung,
                                       int k_max);

struct ThetaReport {
  int k_max = 0;
  int rung = 0;
  std::vector<QhatSeries> fibers;
  double theta_mean = 0.0;         // plain average over fibers
  double t_theta_mean = 0.0;       // average of t * theta
  double weighted_qhat_sum = 0.0;  // hole-measure weighted average of sum qhat
};

ThetaReport theta_estimate(const FiberPath& path, std::int64_t lo, std::int64_t hi,
                           int rung, int k_max);

struct GumbelReport {
  double nu_form = 0.0;            // exact masked cocycle mass
  double mu_form = 0.0;            // grid operator survivor (mu start)
  double lambda_ratio_form = 0.0;  // product of exact open multipliers
  double target = 0.0;             // exp(-integral of t*theta)
  double budget = 0.0;             // certified agreement budget for the forms
};

GumbelReport gumbel_check(const FiberPath& path, int rung, int N, double target_rate,
                          ThermoEngine* eng = nullptr);

struct HittingCheckRow {
  int N = 0;
  double mc_survival = 0.0;
  double op_survival = 0.0;
  double sigma = 0.0;  // binomial std error of the MC estimate
};

struct HittingReport {
  double ks = 0.0;
  double rate = 0.0;
  double scale = 0.0;  // mean hole measure used for rescaling
  std::size_t samples = 0;
  std::size_t exhausted = 0;  // orbits that outlived the window (reported, never dropped)
  std::vector<HittingCheckRow> rows;
};

HittingReport hitting_time_mc(const FiberPath& path, int rung, std::size_t samples,
                              std::uint64_t seed, double rate,
                              const std::vector<int>& check_Ns);

// Mean of (t + xi) over the schedule rows of one rung; the non-standard
// ergodic average that must settle at the integral of t.
double husler_average(const ThresholdReport& rep, int rung);

}  // namespace ros
