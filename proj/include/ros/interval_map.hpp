#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ros/intervals.hpp"

namespace ros {

// Piecewise-affine surjective interval maps.  Branch domains are half-open
// [a,b), the final branch is closed at 1; evaluation at a shared boundary
// uses the owning (left-closed) branch.  Each branch is a plain affine map
// y = slope*x + intercept whose image already lies inside [0,1]; circle maps
// are represented by splitting at the mod-1 crossing points, with `wraps`
// recording that the intercept was reduced.

struct Branch {
  double a = 0.0;       // domain [a, b)
  double b = 0.0;
  double slope = 0.0;   // nonzero
  double intercept = 0.0;
  bool wraps = false;

  double eval(double x) const { return slope * x + intercept; }
  double inverse(double y) const { return (y - intercept) / slope; }
  Interval image() const {
    double u = eval(a), v = eval(b);
    return u < v ? Interval{u, v} : Interval{v, u};
  }
};

struct Preimage {
  double point = 0.0;
  std::size_t branch = 0;
};

class PiecewiseAffineMap {
 public:
  PiecewiseAffineMap() = default;
  explicit PiecewiseAffineMap(std::vector<Branch> branches, std::string family = "",
                              double param = 0.0);

  const std::vector<Branch>& branches() const { return branches_; }
  std::size_t branch_count() const { return branches_.size(); }
  const std::string& family() const { return family_; }
  double param() const { return param_; }

  double eval(double x) const;
  std::size_t branch_index(double x) const;
  double derivative_at(double x) const { return branches_[branch_index(x)].slope; }

  // All solutions of T(y) = x, one per branch whose (closed) image contains x.
  std::vector<Preimage> preimages(double x) const;

  // Max branch slope magnitude and min slope magnitude.
  double max_abs_slope() const;
  double min_abs_slope() const;

  // Union of branch images covers [0,1] (up to measure-zero slack).
  bool is_surjective(double slack = 1e-12) const;

  // Sum over covering branches of 1/|T'| equals 1 everywhere, i.e. the map
  // preserves Lebesgue measure.  Checked exactly on the partition induced by
  // all branch-image endpoints.
  bool preserves_lebesgue(double tol = 1e-12) const;

  // Image of a subset of [0,1], computed branch by branch (exact).
  IntervalSet image_of(const IntervalSet& s) const;

  // Full preimage T^{-1}(s) as an interval set (exact).
  IntervalSet preimage_of(const IntervalSet& s) const;

 private:
  std::vector<Branch> branches_;
  std::string family_;
  double param_ = 0.0;
};

// Geometric weight g = 1/|T'|^r, constant on each affine branch.
struct WeightFunction {
  double r = 1.0;
  double branch_weight(const Branch& br) const;
};

// Three full affine branches, Lebesgue-preserving, with central branch of
// slope s through the fixed point 1/2 and outer branches of slope -2/(1-1/s).
PiecewiseAffineMap make_example1_map(double s);

// T(x) = beta*x + r mod 1 with beta >= 2 (possibly non-integer; the last
// branch may then be short).
PiecewiseAffineMap make_beta_map(double beta, double r_shift);

// Convenience: the tripling map 3x mod 1.
PiecewiseAffineMap make_tripling_map();

// -------- standing-assumption checker ----------------------------------

struct FiberSystem {
  PiecewiseAffineMap map;
  WeightFunction weight;
  // Nested hole ladder for this fiber, outermost (largest) first.
  std::vector<IntervalSet> hole_ladder;
};

struct ConditionResult {
  std::string name;
  bool pass = false;
  std::string witness;        // the numbers that decide the condition
  int offending_fiber = -1;   // index into the checked window, or -1
};

struct AssumptionReport {
  std::vector<ConditionResult> conditions;
  bool all_pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return true;
  }
};

// Checks the uniform expansivity/weight/hole conditions on a sampled window
// of fibers: bounded derivatives and branch counts, weight bounds, covering,
// hole nesting and component bounds, surjectivity off the hole, and the
// n-step contraction inequality 9*sup|g^(n')| < inf L^{n'}_eps(1).
AssumptionReport verify_assumptions(const std::vector<FiberSystem>& fibers,
                                    int n_prime, double cover_cap = 64);

}  // namespace ros
