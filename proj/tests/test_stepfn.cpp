#include <cmath>

#include "doctest.h"
#include "ros/interval_map.hpp"
#include "ros/stepfn.hpp"

using namespace ros;

TEST_CASE("constant step function basics") {
  StepFn f(2.5);
  CHECK(f.integral() == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(f.eval(0.0) == 2.5);
  CHECK(f.eval(0.999) == 2.5);
  CHECK(f.sup() == 2.5);
  CHECK(f.inf() == 2.5);
  CHECK(f.total_variation() == 0.0);
}

TEST_CASE("indicator, masking and exact integrals") {
  IntervalSet s({{0.25, 0.5}, {0.75, 0.875}});
  StepFn ind = StepFn::indicator(s);
  CHECK(ind.integral() == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(ind.eval(0.3) == 1.0);
  CHECK(ind.eval(0.6) == 0.0);

  StepFn f(3.0);
  StepFn masked = f.masked(s.complement());
  CHECK(masked.integral() == doctest::Approx(3.0 * 0.625).epsilon(1e-15));
  CHECK(masked.eval(0.3) == 0.0);
  CHECK(masked.eval(0.6) == 3.0);

  CHECK(f.integral_over(s) == doctest::Approx(3.0 * 0.375).epsilon(1e-15));
  CHECK(ind.pair(ind) == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("arithmetic combinators") {
  StepFn a({0.0, 0.5, 1.0}, {1.0, 3.0});
  StepFn b(2.0);
  StepFn sum = a.plus(b, -0.5);
  CHECK(sum.eval(0.25) == doctest::Approx(0.0));
  CHECK(sum.eval(0.75) == doctest::Approx(2.0));
  StepFn prod = a.times(a);
  CHECK(prod.integral() == doctest::Approx(0.5 * 1.0 + 0.5 * 9.0).epsilon(1e-15));
  CHECK(a.scaled(2.0).sup() == 6.0);
  CHECK(a.total_variation() == doctest::Approx(2.0));
}

TEST_CASE("transfer by the tripling map preserves the constant density") {
  auto m = make_tripling_map();
  WeightFunction w{1.0};
  StepFn f(1.0);
  StepFn pf = f.transfer(m, w);
  CHECK(pf.sup() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pf.inf() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pf.integral() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("transfer by a short-branch map has the known plateau values") {
  auto m = make_beta_map(2.5, 0.0);
  WeightFunction w{1.0};
  StepFn pf = StepFn(1.0).transfer(m, w);
  // Three preimages below 1/2, two above.
  CHECK(pf.eval(0.25) == doctest::Approx(3.0 / 2.5).epsilon(1e-14));
  CHECK(pf.eval(0.75) == doctest::Approx(2.0 / 2.5).epsilon(1e-14));
  CHECK(pf.integral() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("composition pullback is the exact preimage indicator") {
  auto m = make_tripling_map();
  StepFn f = StepFn::indicator(IntervalSet({{0.0, 1.0 / 3.0}}));
  StepFn g = f.compose_with(m);
  CHECK(g.integral() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(g.eval(0.05) == 1.0);
  CHECK(g.eval(0.2) == 0.0);
  CHECK(g.eval(0.35) == 1.0);
  CHECK(g.eval(0.7) == 1.0);
}

TEST_CASE("compress merges equal neighbours without changing the function") {
  StepFn f({0.0, 0.25, 0.5, 1.0}, {2.0, 2.0, 5.0});
  double before = f.integral();
  f.compress(0.0);
  CHECK(f.cell_count() == 2);
  CHECK(f.integral() == doctest::Approx(before).epsilon(1e-15));
  CHECK(f.eval(0.3) == 2.0);
  CHECK(f.eval(0.9) == 5.0);
}
