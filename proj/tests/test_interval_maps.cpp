#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ros/interval_map.hpp"

using namespace ros;

TEST_CASE("three-branch map with central slope 2") {
  auto m = make_example1_map(2.0);
  CHECK(m.branch_count() == 3);
  CHECK(m.eval(0.0) == doctest::Approx(1.0));
  CHECK(m.eval(0.25) == doctest::Approx(0.0));
  CHECK(m.eval(0.5) == doctest::Approx(0.5));   // central fixed point
  CHECK(m.eval(0.75) == doctest::Approx(1.0));
  CHECK(m.eval(1.0) == doctest::Approx(0.0));
  CHECK(m.max_abs_slope() == doctest::Approx(4.0));
  CHECK(m.min_abs_slope() == doctest::Approx(2.0));
  CHECK(m.is_surjective());
  CHECK(m.preserves_lebesgue());

  auto pre = m.preimages(0.5);
  REQUIRE(pre.size() == 3);
  std::vector<double> pts;
  for (const auto& p : pre) pts.push_back(p.point);
  std::sort(pts.begin(), pts.end());
  CHECK(pts[0] == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(pts[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pts[2] == doctest::Approx(0.875).epsilon(1e-14));
}

TEST_CASE("three-branch map with central slope 3 keeps the fixed point") {
  auto m = make_example1_map(3.0);
  CHECK(m.eval(0.5) == doctest::Approx(0.5));
  CHECK(m.derivative_at(0.5) == doctest::Approx(3.0));
  CHECK(m.preserves_lebesgue());
  CHECK(m.is_surjective());
}

TEST_CASE("beta maps: surjectivity always, invariance only for integer slope") {
  auto short_branch = make_beta_map(2.5, 0.0);
  CHECK(short_branch.branch_count() == 3);
  CHECK(short_branch.eval(0.2) == doctest::Approx(0.5));
  CHECK(short_branch.is_surjective());
  CHECK_FALSE(short_branch.preserves_lebesgue());

  auto shifted = make_beta_map(3.0, 0.41421356237309515);
  CHECK(shifted.is_surjective());
  CHECK(shifted.preserves_lebesgue());
  CHECK(shifted.eval(0.1) ==
        doctest::Approx(std::fmod(3.0 * 0.1 + 0.41421356237309515, 1.0)));
}

TEST_CASE("tripling map set images and preimages are exact") {
  auto m = make_tripling_map();
  CHECK(m.eval(0.5) == doctest::Approx(0.5));
  CHECK(m.derivative_at(0.9) == doctest::Approx(3.0));
  IntervalSet third({{0.0, 1.0 / 3.0}});
  IntervalSet pre = m.preimage_of(third);
  CHECK(pre.component_count() == 3);
  CHECK(pre.measure() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  IntervalSet img = m.image_of(IntervalSet({{0.0, 0.1}}));
  CHECK(img.measure() == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(m.image_of(IntervalSet::whole()).measure() == doctest::Approx(1.0));
}

TEST_CASE("standing assumptions hold on a window of three-branch fibers") {
  std::vector<FiberSystem> fs;
  for (int k = 0; k < 10; ++k) {
    FiberSystem f;
    f.map = make_example1_map(2.0);
    f.weight.r = 1.0;
    f.hole_ladder = {IntervalSet({{0.49, 0.51}}), IntervalSet({{0.499, 0.501}})};
    fs.push_back(std::move(f));
  }
  AssumptionReport rep = verify_assumptions(fs, 5);
  for (const auto& c : rep.conditions) {
    INFO(c.name << ": " << c.witness);
    CHECK(c.pass);
  }
  CHECK(rep.all_pass());
}
