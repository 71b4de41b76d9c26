#pragma once

#include <vector>

#include "ros/interval_map.hpp"
#include "ros/intervals.hpp"

namespace ros {

// Exact piecewise-constant functions on [0,1).
//
// Affine-branch transfer operators map step functions to step functions: the
// breakpoints of Pf are the branch images of the breakpoints of f plus the
// branch-image endpoints, so the breakpoint count grows additively (not
// multiplicatively) per application.  That makes this representation an
// exact engine for open-cocycle quantities whose holes are far below any
// affordable uniform grid resolution: survivor probabilities, conditional
// return probabilities, and perturbed fiber multipliers all come out at
// machine precision for the piecewise-affine families used here.

class StepFn {
 public:
  // Constant function.
  explicit StepFn(double value = 0.0);
  // cuts must start at 0, end at 1, strictly increasing; one value per cell.
  StepFn(std::vector<double> cuts, std::vector<double> vals);

  static StepFn indicator(const IntervalSet& s);

  const std::vector<double>& cuts() const { return cuts_; }
  const std::vector<double>& vals() const { return vals_; }
  std::size_t cell_count() const { return vals_.size(); }

  double eval(double x) const;
  double integral() const;
  double pair(const StepFn& g) const;  // integral of f*g
  double sup() const;
  double inf() const;
  double total_variation() const;

  StepFn scaled(double c) const;
  StepFn plus(const StepFn& g, double gscale = 1.0) const;
  StepFn times(const StepFn& g) const;
  // f * 1_S  (restriction to S, zero elsewhere).
  StepFn masked(const IntervalSet& keep) const;
  // integral of f over S, exact.
  double integral_over(const IntervalSet& s) const;

  // Weighted transfer: (Pf)(x) = sum over branches containing a preimage of
  // x of g_branch * f(branch inverse of x).  Exact.
  StepFn transfer(const PiecewiseAffineMap& map, const WeightFunction& w) const;

  // Composition pullback (the adjoint direction): f(T(x)) as a step
  // function; exact since T is piecewise affine.
  StepFn compose_with(const PiecewiseAffineMap& map) const;

  // Merge adjacent cells whose values differ by at most tol (absolute) and
  // drop empty cells; bounds breakpoint growth over long cocycles.
  void compress(double tol = 0.0);

 private:
  std::vector<double> cuts_;  // size m+1
  std::vector<double> vals_;  // size m
};

}  // namespace ros
