#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ros/evt.hpp"
#include "ros/thermo.hpp"

using namespace ros;
using ros::testing::const_path;

namespace {

FiberPath slope2_path(std::int64_t K, std::int64_t N) {
  FiberPath p = const_path(K, N, make_example1_map(2.0), 1.0);
  for (std::int64_t k = -K; k <= N; ++k) p.at(k).par.obs.peak = 0.5;
  return p;
}

}  // namespace

TEST_CASE("closed-form thresholds hit the target measure with zero slack") {
  FiberPath p = slope2_path(14, 60);
  ScheduleOptions opt;
  opt.N_ladder = {100.0, 1000.0};
  ThresholdReport rep = solve_thresholds(p, -13, 50, opt);
  CHECK(rep.nested);
  for (const auto& row : rep.rows) {
    CHECK(std::abs(row.xi) <= 1e-12);
    CHECK(row.hole_measure == doctest::Approx(row.t / row.N).epsilon(1e-14));
  }
  CHECK(husler_average(rep, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(husler_average(rep, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate or out-of-range thresholds are refused") {
  FiberPath p = slope2_path(4, 10);
  ScheduleOptions whole;
  whole.N_ladder = {0.5};  // target measure 2 > 1
  CHECK_THROWS_AS(solve_thresholds(p, 0, 2, whole), std::invalid_argument);

  FiberPath edge = slope2_path(4, 10);
  for (std::int64_t k = -4; k <= 10; ++k) edge.at(k).par.obs.peak = 0.001;
  ScheduleOptions opt;
  opt.N_ladder = {50.0};  // ball radius 0.01 leaves the interval at peak 0.001
  CHECK_THROWS_AS(solve_thresholds(edge, 0, 2, opt), std::invalid_argument);
}

TEST_CASE("conditional return probabilities at a slope-2 fixed point") {
  FiberPath p = slope2_path(20, 40);
  ScheduleOptions opt;
  opt.N_ladder = {1000.0};
  solve_thresholds(p, -14, 30, opt);
  QhatSeries qs = qhat_series(p, 2, 0, 13);
  // The hole straddles the fixed point of the central slope-2 branch: half
  // of the conditioned mass was in the hole one step earlier.
  CHECK(qs.qhat[0] == doctest::Approx(0.5).epsilon(4e-3));
  CHECK(std::abs(qs.sum() - 0.5) <= 1e-2);
  CHECK(qs.theta() == doctest::Approx(0.5).epsilon(2e-2));
  CHECK(qs.hole_measure == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("alternating hole scalings switch the dominant return mechanism") {
  FiberPath p = const_path(20, 40, make_example1_map(3.0), 1.0);
  for (std::int64_t k = -20; k <= 40; ++k) {
    p.at(k).par.obs.peak = 0.5;
    p.at(k).par.t = (((k % 2) + 2) % 2 == 0) ? 1.0 : 4.0;
  }
  ScheduleOptions opt;
  opt.N_ladder = {1000.0};
  solve_thresholds(p, -14, 30, opt);
  // Shrinking hole (previous 4x wider): the central preimage covers it, so
  // the branch-derivative reciprocal wins.
  QhatSeries narrow = qhat_series(p, 2, 0, 13);
  CHECK(narrow.qhat[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  // Growing hole (previous 4x narrower): the scaling ratio wins.
  QhatSeries wide = qhat_series(p, 3, 0, 13);
  CHECK(wide.qhat[0] == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("operator-form return probabilities match the exact series") {
  FiberPath p = slope2_path(100, 120);
  ScheduleOptions opt;
  opt.N_ladder = {100.0};  // resolvable on the grid: 41 cells wide
  solve_thresholds(p, -14, 60, opt);
  ThermoEngine eng(p, 4096);
  QhatSeries exact = qhat_series(p, 2, 0, 6);
  std::vector<double> op = qhat_operator_form(eng, 2, 0, 6);
  REQUIRE(op.size() == exact.qhat.size());
  for (std::size_t i = 0; i < op.size(); ++i)
    CHECK(std::abs(op[i] - exact.qhat[i]) <= 0.02);
}

TEST_CASE("fiber-averaged extremal index of the slope-2 family") {
  FiberPath p = slope2_path(14, 110);
  ScheduleOptions opt;
  opt.N_ladder = {1000.0};
  solve_thresholds(p, -13, 100, opt);
  ThetaReport rep = theta_estimate(p, 0, 99, 0, 12);
  CHECK(rep.theta_mean == doctest::Approx(0.5).epsilon(2e-2));
  CHECK(rep.t_theta_mean == doctest::Approx(rep.theta_mean).epsilon(1e-12));
  CHECK(rep.weighted_qhat_sum == doctest::Approx(1.0 - rep.theta_mean).epsilon(1e-9));
}

TEST_CASE("non-exceedance forms agree and approach the exponential limit") {
  const int N = 500;
  FiberPath p = slope2_path(90, N + 40);
  ScheduleOptions opt;
  opt.N_ladder = {static_cast<double>(N)};
  solve_thresholds(p, -89, N + 5, opt);
  GumbelReport g = gumbel_check(p, 0, N, 0.5);
  CHECK(std::abs(g.nu_form - g.lambda_ratio_form) <= g.budget);
  CHECK(std::abs(g.nu_form - g.mu_form) <= g.budget);
  CHECK(g.target == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(std::abs(g.nu_form - g.target) <= 0.02);
}

TEST_CASE("exact survivors require measure-preserving unit-weight fibers") {
  FiberPath p = const_path(4, 10, make_beta_map(2.5, 0.0), 1.0);
  CHECK_THROWS_AS(survivor_exact(p, 0, 0, 3), std::invalid_argument);
  FiberPath q = const_path(4, 10, make_example1_map(2.0), 2.0);
  CHECK_THROWS_AS(lambda_sequence_exact(q, 0, 2, 0, 2), std::invalid_argument);
}

TEST_CASE("sampled hitting times follow the operator survivor curve") {
  const int W = 16000;
  FiberPath p = slope2_path(14, W + 2);
  ScheduleOptions opt;
  opt.N_ladder = {200.0};
  solve_thresholds(p, -13, W + 1, opt);
  HittingReport rep =
      hitting_time_mc(p, 0, 3000, 2024, 0.5, {W / 32, W / 8});
  CHECK(rep.scale == doctest::Approx(1.0 / 200.0).epsilon(1e-12));
  CHECK(rep.exhausted < 30);
  CHECK(rep.ks <= 0.05);
  for (const auto& row : rep.rows) {
    CHECK(std::abs(row.mc_survival - row.op_survival) <=
          3.0 * row.sigma + 0.005);
  }
}
