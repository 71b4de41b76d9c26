#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ros/limits.hpp"

using namespace ros;
using ros::testing::const_path;

namespace {

constexpr double kTau = 6.283185307179586;

FiberPath slope2_path(std::int64_t K, std::int64_t N) {
  return const_path(K, N, make_example1_map(2.0), 1.0);
}

}  // namespace

TEST_CASE("inverse-CDF sampling of the flat density is the identity") {
  GridDensity flat = GridDensity::constant(64, 1.0);
  for (double u : {0.0, 0.123, 0.5, 0.97})
    CHECK(sample_grid_density(flat, u) == doctest::Approx(u).epsilon(1e-12));
}

TEST_CASE("correlation-sum variance of the cosine observable") {
  FiberPath p = slope2_path(70, 400);
  ThermoEngine eng(p, 512);
  auto v = [](double x) { return std::cos(kTau * x); };
  VarianceReport var = variance_estimate(eng, v, 60, 0, 1);
  CHECK(var.sigma2 == doctest::Approx(0.700981060327).epsilon(1e-6));
  CHECK(var.var_instant == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(var.tail_bound <= 1e-12);
}

TEST_CASE("normalized sums of a genuine observable pass the normality check") {
  FiberPath p = slope2_path(70, 400);
  ThermoEngine eng(p, 512);
  auto v = [](double x) { return std::cos(kTau * x); };
  VarianceReport var = variance_estimate(eng, v, 60, 0, 1);
  CltReport rep = clt_check(eng, v, var.sigma2, 256, 20000, 1234);
  CHECK(rep.ks <= 0.02);
}

TEST_CASE("vanishing variance is reported as the degenerate branch") {
  FiberPath p = slope2_path(70, 400);
  ThermoEngine eng(p, 512);
  auto c = [](double) { return 1.0; };
  VarianceReport var = variance_estimate(eng, c, 20, 0, 1);
  CHECK(std::abs(var.sigma2) <= 1e-8);
  CHECK_THROWS_AS(clt_check(eng, c, var.sigma2, 64, 100, 1),
                  std::domain_error);
}

TEST_CASE("empirical deviation probabilities respect the explicit bound") {
  FiberPath p = slope2_path(70, 1100);
  ThermoEngine eng(p, 512);
  auto v = [](double x) { return std::cos(kTau * x); };
  AzumaReport rep =
      azuma_bound_check(eng, v, {0.3, 0.5}, {256, 1024}, 3000, 555);
  CHECK(rep.C1 > 0.0);
  CHECK(rep.C2 > 0.0);
  int applicable = 0;
  for (const auto& row : rep.rows) {
    CHECK_FALSE(row.violated);
    if (row.applicable) ++applicable;
  }
  CHECK(applicable > 0);
}

TEST_CASE("shrinking-target counts settle at the expected density") {
  auto m = make_example1_map(2.0);
  auto map_at = [&m](std::int64_t) -> const PiecewiseAffineMap& { return m; };
  BcReport rep = borel_cantelli_count(map_at, 0.31, 0.1, 1.0, 100000, 300, 77);
  CHECK_FALSE(rep.refused);
  CHECK(rep.ratio == doctest::Approx(1.0).epsilon(0.05));
  BcReport summable = borel_cantelli_count(map_at, 0.31, 0.1, 2.0, 1000, 10, 77);
  CHECK(summable.refused);
}

TEST_CASE("the operator duality behind the martingale construction holds") {
  FiberPath p = slope2_path(70, 200);
  ThermoEngine eng(p, 512);
  auto v = [](double x) { return std::cos(kTau * x); };
  CHECK(transfer_duality_residual(eng, 0, v, 99) <= 1e-12);
}
