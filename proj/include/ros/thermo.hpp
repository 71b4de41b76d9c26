#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ros/driving.hpp"
#include "ros/transfer.hpp"

namespace ros {

// Quenched equilibrium data for one fiber and one hole-ladder rung.
// phi is the equivariant density, scaled so that the closed conformal
// functional at the same fiber pairs with it to 1; lambda is then read off
// by pairing the pushed-forward density against the next fiber's closed
// functional.  With that scaling the perturbative identities below hold to
// round-off on exact grids.
struct ThermoFiberData {
  std::int64_t k = 0;
  int eps = -1;  // ladder rung, -1 = closed
  double lambda = 0.0;
  GridDensity phi;
  int pull_depth = 0;
  double normalization_residual = 0.0;
};

struct EscapeRateRow {
  int eps = 0;
  double R_fit = 0.0;       // decay-fit of the survivor curve
  double R_birkhoff = 0.0;  // window average of log lambda_0 - log lambda_eps
  double mu_hole_avg = 0.0;
  double ratio = 0.0;  // R_birkhoff / mu_hole_avg
};

struct EscapeRateReport {
  std::vector<EscapeRateRow> rows;
  double extrapolated_ratio = 0.0;  // Richardson over the ladder
};

struct DecayEstimate {
  double kappa = 0.0;  // fitted geometric rate of the zero-mean remainder
  double D = 0.0;      // fitted prefactor
};

struct CondInvariantReport {
  GridDensity density;          // supported off the hole
  double multiplier = 0.0;      // one-step mass ratio
  double max_residual = 0.0;    // conditional-invariance defect over test sets
  double sup_density = 0.0;
  double inf_off_hole = 0.0;
};

// Grid engine for the fiberwise eigen-data along a sampled path.  Dual
// functionals come from backward adjoint sweeps, densities from forward
// pullback sweeps; both are cached per fiber.  eps < 0 selects the closed
// cocycle, eps >= 0 the corresponding hole-ladder rung.
class ThermoEngine {
 public:
  ThermoEngine(const FiberPath& path, std::size_t grid, int depth = 60);

  const FiberPath& path() const { return path_; }
  TransferCache& cache() { return cache_; }
  std::size_t grid() const { return cache_.grid_size(); }
  int depth() const { return depth_; }

  // Closed conformal weights at fiber k, normalized to a probability
  // functional (mean 1 on the grid).
  const std::vector<double>& nu0(std::int64_t k);

  const ThermoFiberData& fiber(std::int64_t k, int eps);
  double lambda(std::int64_t k, int eps) { return fiber(k, eps).lambda; }

  // mu_{omega,0}(S) via the phi_0-weighted closed functional.
  double mu0_measure(std::int64_t k, const IntervalSet& s);

  // pairing(nu_{k+1,0}, (L_0 - L_eps) phi_{k,0}); equals lambda_0 * mu0(H)
  // on exact grids.
  double delta(std::int64_t k, int eps);

  // Dual norm of f -> pairing(nu_{k+1,0}, (L_0 - L_eps) f) over the unit
  // cube of grid step functions (exact sign-splitting sum).
  double eta(std::int64_t k, int eps);

  // Survivor mass nu_{k,0}(X_{k,N-1,eps}) (or the mu_0 version), i.e. the
  // masked cocycle applied to 1 (or phi_0), paired against the closed
  // functional at k+N and normalized by the closed multipliers.
  double survivor(std::int64_t k, int eps, int N, bool mu_version);

  // Spectral prediction for the same quantity:
  // prod(lambda_eps/lambda_0) * nu_{k,eps}(1 or phi_0), with nu_eps from a
  // masked adjoint sweep scaled so nu_{k,eps}(phi_{k,eps}) = 1.
  double survivor_spectral(std::int64_t k, int eps, int N, bool mu_version);

  // Per-fiber multipliers lambda_{j,eps} for j in [k0, k0+count), one
  // forward sweep.
  std::vector<double> lambda_sequence(std::int64_t k0, int count, int eps);

  EscapeRateReport escape_rate(const std::vector<int>& rungs, int window,
                               int fit_horizon);

  DecayEstimate decay_rate(std::int64_t k, int eps, int probes, int steps,
                           std::uint64_t seed);

  CondInvariantReport conditionally_invariant(std::int64_t k, int eps,
                                              int test_sets = 16);

  // Certification: recompute phi at depth+extra and report the sup
  // difference (geometric in the extra depth when the gap is honest).
  double certify_depth(std::int64_t k, int eps, int extra = 5);

 private:
  GridDensity pullback_phi(std::int64_t k, int eps, int depth_used);
  const IntervalSet* hole_at(std::int64_t k, int eps) const;

  const FiberPath& path_;
  TransferCache cache_;
  int depth_;
  std::map<std::int64_t, std::vector<double>> nu0_;
  std::map<std::pair<std::int64_t, int>, ThermoFiberData> fibers_;
};

}  // namespace ros
