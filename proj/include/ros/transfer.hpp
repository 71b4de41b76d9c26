#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ros/driving.hpp"
#include "ros/interval_map.hpp"
#include "ros/intervals.hpp"
#include "ros/kernels.hpp"

namespace ros {

// Piecewise-constant density on the uniform n-cell partition of [0,1].
// Values are cell averages, so the integral is the mean of the values.
struct GridDensity {
  std::size_t n = 0;
  std::vector<double> values;
  bool nonnegative = true;

  static GridDensity constant(std::size_t n, double v) {
    return GridDensity{n, std::vector<double>(n, v), v >= 0.0};
  }
  double integral() const;
  double sup() const;
  double inf() const;
};

// Lebesgue pairing of a dual weight vector (or another density) with a
// density: (1/n) * sum w_i f_i.
double pairing(const std::vector<double>& w, const GridDensity& f);

// Fraction of each cell lying outside the hole; exact endpoint arithmetic,
// no snapping, so sum (1-mask_i)/n reproduces Leb(H) exactly.
std::vector<double> hole_mask(const IntervalSet& hole, std::size_t n);

struct TransferMatrix {
  CsrMatrix m;
  bool exact = false;  // all branch endpoints grid-aligned
  std::size_t n() const { return m.n; }

  GridDensity apply(const GridDensity& f) const;
  GridDensity apply_masked(const GridDensity& f, const std::vector<double>& mask) const;
  // Transpose action on dual weight vectors: (M^T w).
  std::vector<double> apply_transpose(const std::vector<double>& w) const;
  std::vector<double> apply_transpose_masked(const std::vector<double>& w,
                                             const std::vector<double>& mask) const;
};

// Exact matrix of the weighted transfer operator on n-cell step densities:
// entry (i,j) = n * sum over branches of |slope| * g * len(T_b^{-1}(cell_i)
// cap cell_j).  Exact for step-function inputs whenever branch endpoints are
// grid points; otherwise the deviation is O(1/n) and the flag says so.
TransferMatrix build_transfer_matrix(const PiecewiseAffineMap& map,
                                     const WeightFunction& weight, std::size_t n);

// Column scaling by the hole mask: the open operator as its own matrix.
TransferMatrix open_operator(const TransferMatrix& closed,
                             const std::vector<double>& mask);

// Shared read-only cache keyed by (map family, parameter, weight exponent,
// grid size); fibers carrying identical maps share one matrix.
class TransferCache {
 public:
  explicit TransferCache(std::size_t n) : n_(n) {}
  std::size_t grid_size() const { return n_; }
  const TransferMatrix& matrix_for(const PiecewiseAffineMap& map,
                                   const WeightFunction& weight);

 private:
  std::size_t n_;
  std::map<std::string, std::unique_ptr<TransferMatrix>> cache_;
};

// Apply the (possibly open) cocycle along the path: fibers k0, k0+1, ...,
// k0+steps-1 in that order.  eps < 0 means the closed cocycle; otherwise
// eps indexes each fiber's hole ladder.
GridDensity cocycle_apply(const FiberPath& path, int eps, std::int64_t k0, int steps,
                          GridDensity f, TransferCache& cache);

struct LyDiagnostic {
  double bound = 0.0;      // 9 * sup of the n'-step weight product
  double empirical = 0.0;  // max variation ratio over the single-cell basis
  bool pass = false;
};

// Variation-expansion check for the n'-step open operator starting at fiber
// k0: the empirical max of var(L^{n'} e)/var(e) over single-cell basis
// elements must not exceed the weight-product bound (plus slack).
LyDiagnostic lasota_yorke_diagnostic(const FiberPath& path, int eps, std::int64_t k0,
                                     int n_prime, TransferCache& cache);

// Largest grid size <= cap that makes every branch endpoint of every fiber
// grid-aligned, or 0 if none is found.
std::size_t aligned_grid_size(const FiberPath& path, std::size_t cap);

}  // namespace ros
