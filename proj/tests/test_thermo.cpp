#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ros/evt.hpp"
#include "ros/rng.hpp"
#include "ros/thermo.hpp"

using namespace ros;
using ros::testing::const_path;

namespace {

FiberPath holed_path(double s, const IntervalSet& hole) {
  FiberPath p = const_path(100, 120, make_example1_map(s), 1.0);
  for (std::int64_t k = -100; k <= 120; ++k) p.at(k).holes = {hole};
  return p;
}

}  // namespace

TEST_CASE("measure-preserving fibers have unit multiplier and flat density") {
  FiberPath p = const_path(70, 80, make_example1_map(2.0), 1.0);
  ThermoEngine eng(p, 256);
  const ThermoFiberData& f = eng.fiber(0, -1);
  CHECK(f.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.phi.sup() - f.phi.inf() <= 1e-10);
  CHECK(f.phi.integral() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("unweighted tripling cocycle has multiplier three") {
  FiberPath p = const_path(70, 80, make_tripling_map(), 0.0);
  ThermoEngine eng(p, 243);
  CHECK(eng.lambda(0, -1) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dual functionals are conformal against random densities") {
  FiberPath p = const_path(70, 80, make_example1_map(2.0), 1.0);
  ThermoEngine eng(p, 256);
  const TransferMatrix& M =
      eng.cache().matrix_for(p.at(0).par.map, p.at(0).par.weight);
  Stream st(17);
  GridDensity g = GridDensity::constant(256, 0.0);
  for (double& x : g.values) x = st.uniform();
  double lhs = pairing(eng.nu0(1), M.apply(g));
  double rhs = eng.lambda(0, -1) * pairing(eng.nu0(0), g);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("difference pairing equals multiplier times hole measure exactly") {
  IntervalSet hole({{0.5 - 1.0 / 32.0, 0.5 + 1.0 / 32.0}});
  FiberPath p = holed_path(2.0, hole);
  ThermoEngine eng(p, 256);
  for (std::int64_t k = 0; k < 5; ++k) {
    double lhs = eng.delta(k, 0);
    double rhs = eng.lambda(k, -1) * eng.mu0_measure(k, hole);
    CHECK(std::abs(lhs - rhs) <= 1e-14);
  }
  // The dual norm dominates the pairing and coincides with it here because
  // the equilibrium density is flat.
  CHECK(eng.eta(0, 0) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(eng.eta(0, 0) + 1e-13 >= eng.delta(0, 0));
}

TEST_CASE("open multipliers: grid and exact engines agree to round-off") {
  IntervalSet hole({{0.5 - 1.0 / 32.0, 0.5 + 1.0 / 32.0}});
  FiberPath p = holed_path(2.0, hole);
  ThermoEngine eng(p, 256);
  double le_grid = eng.lambda(0, 0);
  double le_exact = lambda_sequence_exact(p, 0, 1, 0, 80)[0];
  CHECK(std::abs(le_grid - le_exact) <= 1e-12);
  CHECK(le_exact == doctest::Approx(0.963780987741463).epsilon(1e-9));
  CHECK(le_grid < eng.lambda(0, -1));
}

TEST_CASE("survivor mass: grid, spectral and exact forms coincide") {
  IntervalSet hole({{0.5 - 1.0 / 32.0, 0.5 + 1.0 / 32.0}});
  FiberPath p = holed_path(2.0, hole);
  ThermoEngine eng(p, 256);
  double s_grid = eng.survivor(0, 0, 50, false);
  double s_exact = survivor_exact(p, 0, 0, 50, true);
  double s_spec = eng.survivor_spectral(0, 0, 50, false);
  CHECK(std::abs(s_grid - s_exact) <= 1e-12);
  CHECK(std::abs(s_spec - s_exact) <= 1e-10);
  CHECK(s_grid == doctest::Approx(0.154504313116025).epsilon(1e-9));
  // Longer horizons survive less.
  CHECK(eng.survivor(0, 0, 80, false) < s_grid);
}

TEST_CASE("density certificates vanish at aligned resolutions") {
  IntervalSet hole({{0.5 - 1.0 / 32.0, 0.5 + 1.0 / 32.0}});
  FiberPath p = holed_path(2.0, hole);
  ThermoEngine eng(p, 256);
  CHECK(eng.certify_depth(0, -1, 6) <= 1e-12);
  CHECK(eng.certify_depth(0, 0, 6) <= 1e-12);
}
