#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

namespace ros {

// Finite-dimensional positive matrix cocycles: a machine-precision testbed
// for the sequential first-order perturbation formula.  The perturbed fiber
// operator is L_eps = L_0 * diag(1 - eps * dir), so the operator difference
// is exactly linear in eps and every perturbative quantity has a computable
// limit.

struct MatrixCocycle {
  int d = 0;
  std::int64_t K = 0, N = 0;  // window [-K, N]
  std::vector<double> eps_ladder;
  std::vector<Eigen::MatrixXd> closed;   // fiber -K .. N
  std::vector<Eigen::VectorXd> mask_dir; // hole direction in [0,1]^d per fiber

  const Eigen::MatrixXd& closed_at(std::int64_t k) const {
    return closed.at(static_cast<std::size_t>(k + K));
  }
  const Eigen::VectorXd& dir_at(std::int64_t k) const {
    return mask_dir.at(static_cast<std::size_t>(k + K));
  }
  // diag entries of the perturbed multiplier 1 - eps*dir.
  Eigen::VectorXd mask_at(std::int64_t k, double eps) const {
    return Eigen::VectorXd::Ones(d) - eps * dir_at(k);
  }
  Eigen::MatrixXd open_at(std::int64_t k, double eps) const {
    return closed_at(k) * mask_at(k, eps).asDiagonal();
  }
  bool degenerate_at(std::int64_t k) const { return dir_at(k).isZero(0.0); }
};

// Entries i.i.d. uniform in [0.5, 1.5]; each fiber's mask zeroes one seeded
// coordinate with depth eps, except a seeded fraction of fibers left
// untouched (degenerate masks, for the exact-equality clause).
MatrixCocycle random_positive_cocycle(int d, std::uint64_t seed, std::int64_t K,
                                      std::int64_t N, std::vector<double> eps_ladder,
                                      double degenerate_fraction = 0.2);

// A cocycle engineered to strain the smallness hypotheses: the zeroed
// coordinate receives almost no mass from the matrices, so eta/Delta blows
// up along the fibers and the harness must flag it rather than pass.
MatrixCocycle adversarial_cocycle(int d, std::uint64_t seed, std::int64_t K,
                                  std::int64_t N, std::vector<double> eps_ladder,
                                  double column_mass = 1e-8);

struct LeadingTriple {
  double lambda = 0.0;
  Eigen::VectorXd phi;  // nu0-pairing 1
  Eigen::VectorXd nu;   // closed functional, nu(1) = 1
  double equivariance_residual = 0.0;  // |L phi - lambda phi_next|_inf
  double q_phi_residual = 0.0;         // |Q(phi)|_inf
  double q_nu_residual = 0.0;          // |nu_next(Q f)| over probes
};

struct PerturbationRow {
  double eps = 0.0;
  double lambda_eps = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double ratio = 0.0;  // (lambda_0 - lambda_eps)/delta
  std::vector<double> q;        // q^{(k)} for k <= k_max
  std::vector<double> qhat_sum; // partial sums of (lambda^{k+1})^{-1} q^{(k)}
};

struct PerturbationLedger {
  std::int64_t fiber = 0;
  int k_max = 0;
  double lambda0 = 0.0;
  std::vector<PerturbationRow> rows;  // one per ladder rung
  double theta = 0.0;                 // 1 - sum of extrapolated q-limits
  double ratio_extrapolated = 0.0;    // polynomial extrapolation of the ratio
  double fitted_order = 0.0;          // convergence order of ratio - theta
  bool degenerate = false;
};

class MatrixCocycleEngine {
 public:
  explicit MatrixCocycleEngine(const MatrixCocycle& c, int depth = 60);

  const MatrixCocycle& cocycle() const { return c_; }

  const Eigen::VectorXd& nu0(std::int64_t k);
  const LeadingTriple& triple(std::int64_t k, double eps);
  double lambda(std::int64_t k, double eps) { return triple(k, eps).lambda; }

  // nu_{sigma w,0}((L_0 - L_eps) phi_{w,0}); exactly eps * derivative.
  double delta(std::int64_t k, double eps);
  // Dual norm of f -> nu_{sigma w,0}((L_0-L_eps) f) over the max-norm unit
  // cube: exact absolute-coefficient sum.
  double eta(std::int64_t k, double eps);
  // q^{(kk)}_{w,eps} as a ratio of the two difference pairings.
  double qk(std::int64_t k, double eps, int kk);
  // Exact eps -> 0 limit of q^{(kk)} (zero whenever the masks shrink
  // linearly; kept general via the derivative operators).
  double qk_limit(std::int64_t k, int kk);
  // 1 - sum_{kk<k_max} (closed multiplier product)^{-1} qk_limit.
  double theta(std::int64_t k, int k_max);

  PerturbationLedger ledger(std::int64_t k, int k_max);

 private:
  const MatrixCocycle& c_;
  int depth_;
  std::map<std::int64_t, Eigen::VectorXd> nus_;
  std::map<std::pair<std::int64_t, double>, LeadingTriple> triples_;
};

// Value at 0 of the interpolating polynomial through (x_i, y_i).
double extrapolate_to_zero(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ros
