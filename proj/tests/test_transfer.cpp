#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "ros/rng.hpp"
#include "ros/transfer.hpp"

using namespace ros;
using ros::testing::const_path;

TEST_CASE("tripling matrix on its aligned three-cell grid is uniform") {
  TransferMatrix M = build_transfer_matrix(make_tripling_map(), {1.0}, 3);
  CHECK(M.exact);
  std::vector<std::vector<double>> dense(3, std::vector<double>(3, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::uint32_t p = M.m.row_ptr[i]; p < M.m.row_ptr[i + 1]; ++p)
      dense[i][M.m.col[p]] += M.m.val[p];
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(dense[i][j] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("unit-weight matrices of measure-preserving maps conserve mass") {
  TransferMatrix M = build_transfer_matrix(make_example1_map(2.0), {1.0}, 256);
  CHECK(M.exact);
  std::vector<double> colsum(M.n(), 0.0);
  for (std::size_t i = 0; i < M.n(); ++i)
    for (std::uint32_t p = M.m.row_ptr[i]; p < M.m.row_ptr[i + 1]; ++p)
      colsum[M.m.col[p]] += M.m.val[p];
  for (double c : colsum) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));

  Stream st(99);
  GridDensity f = GridDensity::constant(256, 0.0);
  for (double& x : f.values) x = st.uniform();
  GridDensity g = M.apply(f);
  CHECK(g.integral() == doctest::Approx(f.integral()).epsilon(1e-13));
}

TEST_CASE("unweighted tripling operator multiplies mass by the branch count") {
  TransferMatrix M = build_transfer_matrix(make_tripling_map(), {0.0}, 81);
  GridDensity one = GridDensity::constant(81, 1.0);
  GridDensity g = M.apply(one);
  CHECK(g.sup() == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(g.inf() == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("hole masks are exact cell fractions") {
  std::vector<double> aligned = hole_mask(IntervalSet({{0.3, 0.4}}), 10);
  CHECK(aligned[2] == doctest::Approx(1.0));
  CHECK(aligned[3] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(aligned[4] == doctest::Approx(1.0));
  std::vector<double> frac = hole_mask(IntervalSet({{0.25, 0.35}}), 10);
  CHECK(frac[2] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(frac[3] == doctest::Approx(0.5).epsilon(1e-14));
  double hole_measure = 0.0;
  for (double m : frac) hole_measure += (1.0 - m) / 10.0;
  CHECK(hole_measure == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("the open operator removes exactly the hole mass") {
  TransferMatrix M = build_transfer_matrix(make_example1_map(2.0), {1.0}, 256);
  IntervalSet hole({{0.46875, 0.53125}});
  std::vector<double> mask = hole_mask(hole, 256);
  TransferMatrix open = open_operator(M, mask);
  GridDensity one = GridDensity::constant(256, 1.0);
  GridDensity g_open = open.apply(one);
  GridDensity g_closed = M.apply(one);
  for (std::size_t i = 0; i < 256; ++i)
    CHECK(g_open.values[i] <= g_closed.values[i] + 1e-14);
  CHECK(g_open.integral() ==
        doctest::Approx(1.0 - hole.measure()).epsilon(1e-13));
  CHECK(open.apply_masked(one, std::vector<double>(256, 1.0)).integral() ==
        doctest::Approx(g_open.integral()).epsilon(1e-13));
}

TEST_CASE("cocycle application composes per-fiber matrices in order") {
  FiberPath p = const_path(2, 6, make_example1_map(2.0), 1.0);
  TransferCache cache(128);
  GridDensity f = GridDensity::constant(128, 0.0);
  for (std::size_t i = 0; i < 128; ++i)
    f.values[i] = 1.0 + std::sin(0.1 * static_cast<double>(i));
  GridDensity via_cocycle = cocycle_apply(p, -1, 0, 3, f, cache);
  const TransferMatrix& M = cache.matrix_for(p.at(0).par.map, p.at(0).par.weight);
  GridDensity manual = M.apply(M.apply(M.apply(f)));
  for (std::size_t i = 0; i < 128; ++i)
    CHECK(via_cocycle.values[i] == doctest::Approx(manual.values[i]).epsilon(1e-12));
}

TEST_CASE("aligned grid sizes divide out every branch endpoint") {
  FiberPath quarters = const_path(0, 4, make_example1_map(2.0), 1.0);
  CHECK(aligned_grid_size(quarters, 4096) == 4096);
  FiberPath fifths = const_path(0, 4, make_beta_map(5.0, 0.0), 1.0);
  std::size_t n = aligned_grid_size(fifths, 4096);
  CHECK(n > 0);
  CHECK(n % 5 == 0);
  CHECK(n <= 4096);
}

TEST_CASE("variation growth of the open cocycle stays under the weight bound") {
  FiberPath p = const_path(8, 8, make_example1_map(2.0), 1.0);
  for (std::int64_t k = -8; k <= 8; ++k)
    p.at(k).holes = {IntervalSet({{0.49, 0.51}})};
  TransferCache cache(256);
  LyDiagnostic d = lasota_yorke_diagnostic(p, 0, 0, 4, cache);
  CHECK(d.pass);
  CHECK(d.empirical <= d.bound);
}
