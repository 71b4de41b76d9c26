#include <cmath>

#include "doctest.h"
#include "ros/matrix_cocycle.hpp"

using namespace ros;

TEST_CASE("polynomial extrapolation is exact on polynomial data") {
  std::vector<double> x = {1e-2, 1e-3, 1e-4};
  std::vector<double> y;
  for (double xi : x) y.push_back(3.0 + 2.0 * xi + 5.0 * xi * xi);
  CHECK(extrapolate_to_zero(x, y) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(extrapolate_to_zero({2.0}, {7.5}) == 7.5);
}

TEST_CASE("seeded cocycles satisfy the first-order perturbation identities") {
  const std::vector<double> ladder = {1e-2, 1e-3, 1e-4};
  MatrixCocycle c = random_positive_cocycle(5, 42, 140, 80, ladder, 0.2);
  MatrixCocycleEngine eng(c, 60);
  int degenerate_seen = 0, regular_seen = 0;
  for (std::int64_t k = 0; k < 10; ++k) {
    PerturbationLedger led = eng.ledger(k, 6);
    const LeadingTriple& t0 = eng.triple(k, 0.0);
    CHECK(t0.equivariance_residual <= 1e-10);
    CHECK(t0.q_phi_residual <= 1e-8);
    CHECK(t0.q_nu_residual <= 1e-8);
    if (led.degenerate) {
      ++degenerate_seen;
      for (const auto& row : led.rows)
        CHECK(std::abs(row.lambda_eps - led.lambda0) <=
              1e-11 * std::max(1.0, std::abs(led.lambda0)));
    } else {
      ++regular_seen;
      CHECK(std::abs(led.ratio_extrapolated - led.theta) <= 1e-8);
      for (const auto& row : led.rows) {
        CHECK(row.delta > 0.0);
        CHECK(row.eta >= 0.0);
        // Healthy cocycles keep the smallness ratio far below the flag level.
        CHECK(row.eta / row.delta <= 1e3);
      }
    }
  }
  CHECK(regular_seen > 0);
}

TEST_CASE("a mass-starved mask coordinate blows up the smallness ratio") {
  const std::vector<double> ladder = {1e-2, 1e-3, 1e-4};
  MatrixCocycle c = adversarial_cocycle(5, 42, 140, 80, ladder);
  MatrixCocycleEngine eng(c, 60);
  bool flagged = false;
  for (std::int64_t k = 0; k < 5 && !flagged; ++k) {
    double d = eng.delta(k, ladder[0]);
    if (d <= 0.0 || eng.eta(k, ladder[0]) / d > 1e3) flagged = true;
  }
  CHECK(flagged);
}

TEST_CASE("construction validation") {
  CHECK_THROWS_AS(random_positive_cocycle(1, 1, 10, 10, {1e-2}),
                  std::invalid_argument);
}
