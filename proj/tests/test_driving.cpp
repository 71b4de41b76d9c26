#include <cmath>

#include "doctest.h"
#include "ros/driving.hpp"
#include "ros/interval_map.hpp"

using namespace ros;

namespace {

DrivingSystem::Assignment two_map_table() {
  return [](const FiberState& st) {
    FiberAssignment a;
    a.map = make_example1_map(st.symbol == 0 ? 2.0 : 3.0);
    a.weight.r = 1.0;
    return a;
  };
}

}  // namespace

TEST_CASE("independent-symbol windows agree wherever they overlap") {
  auto d = DrivingSystem::bernoulli_shift(2, {0.25, 0.75}, two_map_table());
  FiberPath big = d.sample_path(7, 10, 50);
  FiberPath small = d.sample_path(7, 3, 20);
  for (std::int64_t k = -3; k <= 20; ++k) {
    CHECK(big.at(k).state.symbol == small.at(k).state.symbol);
    CHECK(big.at(k).par.map.param() == small.at(k).par.map.param());
  }
  // Point lookups match the sampled window.
  for (std::int64_t k = -3; k <= 20; ++k)
    CHECK(d.state_at(7, k).symbol == big.at(k).state.symbol);
}

TEST_CASE("seeds are reproducible and distinct") {
  auto d = DrivingSystem::bernoulli_shift(2, {0.5, 0.5}, two_map_table());
  FiberPath a = d.sample_path(11, 0, 200);
  FiberPath b = d.sample_path(11, 0, 200);
  int differing = 0;
  for (std::int64_t k = 0; k <= 200; ++k) {
    CHECK(a.at(k).state.symbol == b.at(k).state.symbol);
  }
  FiberPath c = d.sample_path(12, 0, 200);
  for (std::int64_t k = 0; k <= 200; ++k)
    if (a.at(k).state.symbol != c.at(k).state.symbol) ++differing;
  CHECK(differing > 50);
}

TEST_CASE("symbol frequencies follow the weights") {
  auto d = DrivingSystem::bernoulli_shift(2, {0.25, 0.75}, two_map_table());
  int ones = 0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) ones += d.state_at(3, k).symbol;
  double freq = static_cast<double>(ones) / n;
  CHECK(freq == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("rotation driving advances by the angle modulo one") {
  const double alpha = 0.41421356237309515;
  auto d = DrivingSystem::rotation(alpha, two_map_table());
  double prev = d.state_at(5, 0).angle;
  for (std::int64_t k = 1; k <= 30; ++k) {
    double cur = d.state_at(5, k).angle;
    double expect = prev + alpha;
    expect -= std::floor(expect);
    CHECK(cur == doctest::Approx(expect).epsilon(1e-12));
    prev = cur;
  }
  CHECK_FALSE(d.rotation_angle_suspect_rational());
  auto rational = DrivingSystem::rotation(1.0 / 3.0, two_map_table());
  CHECK(rational.rotation_angle_suspect_rational());
}

TEST_CASE("markov driving honours the transition matrix and overlap") {
  auto d = DrivingSystem::markov_shift(2, {{0.0, 1.0}, {1.0, 0.0}}, {1.0, 0.0},
                                       two_map_table());
  FiberPath p = d.sample_path(9, 5, 40);
  for (std::int64_t k = -5; k < 40; ++k)
    CHECK(p.at(k).state.symbol != p.at(k + 1).state.symbol);
  FiberPath q = d.sample_path(9, 0, 10);
  for (std::int64_t k = 0; k <= 10; ++k)
    CHECK(p.at(k).state.symbol == q.at(k).state.symbol);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(DrivingSystem::bernoulli_shift(1, {1.0}, two_map_table()),
                  std::invalid_argument);
  CHECK_THROWS_AS(DrivingSystem::bernoulli_shift(2, {0.7, 0.7}, two_map_table()),
                  std::invalid_argument);
  CHECK_THROWS_AS(DrivingSystem::rotation(1.5, two_map_table()),
                  std::invalid_argument);
  CHECK_THROWS_AS(DrivingSystem::markov_shift(2, {{1.0, 0.0}}, {0.5, 0.5},
                                              two_map_table()),
                  std::invalid_argument);
}
