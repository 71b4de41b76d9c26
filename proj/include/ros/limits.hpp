#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ros/thermo.hpp"

namespace ros {

// Monte Carlo diagnostics for the closed-system limit theorems: variance via
// operator correlations, CLT sampling, the explicit martingale/Hoeffding
// deviation bound, and shrinking-target counting.

struct VarianceReport {
  double sigma2 = 0.0;
  double var_instant = 0.0;  // lag-0 term alone
  double tail_bound = 0.0;   // geometric bound on the dropped lags
  int lags_used = 0;
};

// Green-Kubo sum of operator-computed autocorrelations, fiberwise centered,
// averaged over `bases` consecutive base fibers starting at `base`.
VarianceReport variance_estimate(ThermoEngine& eng,
                                 const std::function<double(double)>& v,
                                 int lag_cutoff, std::int64_t base = 0,
                                 int bases = 1);

struct CltReport {
  double ks = 0.0;
  double sigma2 = 0.0;
  std::size_t samples = 0;
};

// Samples S_n v / sqrt(n) from mu_0 starts (inverse-CDF of the grid density)
// and reports the KS distance to Normal(0, sigma2).  Throws when sigma2 is
// below tol: that is the coboundary branch of the dichotomy, where the
// normalized sums collapse instead of converging to a Gaussian.
CltReport clt_check(ThermoEngine& eng, const std::function<double(double)>& v,
                    double sigma2, int n, std::size_t samples, std::uint64_t seed,
                    double sigma2_tol = 1e-8);

struct AzumaRow {
  double threshold = 0.0;  // deviation level for |S_n/n|
  int n = 0;
  int n0 = 0;  // bound valid for n > n0
  double bound = 0.0;
  double empirical = 0.0;
  bool applicable = false;  // n > n0
  bool violated = false;
};

struct AzumaReport {
  double C1 = 0.0;  // geometric bound on the martingale remainder
  double C2 = 0.0;  // sup norm of the centered observable
  std::vector<AzumaRow> rows;
};

AzumaReport azuma_bound_check(ThermoEngine& eng,
                              const std::function<double(double)>& v,
                              const std::vector<double>& thresholds,
                              const std::vector<int>& horizons,
                              std::size_t samples, std::uint64_t seed);

struct BcReport {
  bool refused = false;      // summable radius schedule
  double expected = 0.0;     // E_n = sum of target measures
  double ratio = 0.0;        // ensemble hit count / (orbits * E_n)
  double remainder_bound = 0.0;  // expected fluctuation scale of the ratio
  std::size_t orbits = 0;
};

// Shrinking-target counting along orbits of Lebesgue-preserving maps:
// targets B(center, c/k^exponent) at step k.  The map provider returns the
// fiber-k map (constant for fixed-map runs without materializing a path).
BcReport borel_cantelli_count(
    const std::function<const PiecewiseAffineMap&(std::int64_t)>& map_at,
    double center, double c, double exponent, std::size_t n_steps,
    std::size_t orbits, std::uint64_t seed);

// Residual of the transfer-operator duality mu_k(v * (g o T)) =
// mu_{k+1}(Pv * g) over random grid probes g; the operator identity behind
// the martingale construction.
double transfer_duality_residual(ThermoEngine& eng, std::int64_t k,
                                 const std::function<double(double)>& v,
                                 std::uint64_t seed, int probes = 8);

// Inverse-CDF sample from a nonnegative grid density (exact for piecewise
// constant densities).
double sample_grid_density(const GridDensity& phi, double u);

}  // namespace ros
