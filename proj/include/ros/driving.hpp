#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ros/interval_map.hpp"
#include "ros/intervals.hpp"

namespace ros {

// The base system: an invertible map on the environment space whose orbit
// selects which interval map, weight, scaling and observable act on each
// time step.  Realized as finite sampled windows of lattice positions; every
// sample is a pure function of (seed, lattice position), so windows of
// different sizes or offsets agree wherever they overlap.

struct FiberState {
  double angle = 0.0;  // rotation driving
  int symbol = 0;      // shift drivings
};

// Observable h(x) = -log dist(x, peak), with the interval or the circle
// metric.  Monotone in the distance, so superlevel sets are balls around the
// peak; that is all the threshold machinery needs.
struct ObservableSpec {
  double peak = 0.5;
  bool circular = false;
  double eval(double x) const;
  double distance(double x) const;
};

struct FiberAssignment {
  PiecewiseAffineMap map;
  WeightFunction weight;
  double t = 1.0;  // scaling of the hole measure target t/N
  ObservableSpec obs;
};

struct Fiber {
  FiberState state;
  FiberAssignment par;
  // Hole ladder (one entry per epsilon/N rung), filled by the threshold
  // machinery; outermost first.
  std::vector<IntervalSet> holes;
};

class FiberPath {
 public:
  FiberPath(std::int64_t K, std::int64_t N, std::uint64_t seed)
      : K_(K), N_(N), seed_(seed), fibers_(static_cast<std::size_t>(K + N + 1)) {}

  std::int64_t left() const { return -K_; }
  std::int64_t right() const { return N_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return fibers_.size(); }

  Fiber& at(std::int64_t k) { return fibers_.at(static_cast<std::size_t>(k + K_)); }
  const Fiber& at(std::int64_t k) const {
    return fibers_.at(static_cast<std::size_t>(k + K_));
  }

 private:
  std::int64_t K_, N_;
  std::uint64_t seed_;
  std::vector<Fiber> fibers_;
};

class DrivingSystem {
 public:
  enum class Kind { Rotation, BernoulliShift, MarkovShift };

  using Assignment = std::function<FiberAssignment(const FiberState&)>;

  static DrivingSystem rotation(double alpha, Assignment assign);
  static DrivingSystem bernoulli_shift(int alphabet, std::vector<double> weights,
                                       Assignment assign);
  static DrivingSystem markov_shift(int alphabet, std::vector<std::vector<double>> rows,
                                    std::vector<double> initial, Assignment assign);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  int alphabet() const { return alphabet_; }
  const std::vector<double>& weights() const { return weights_; }
  // A rational rotation angle is accepted but the realized orbit is then
  // periodic rather than ergodic; callers can surface this in reports.
  bool rotation_angle_suspect_rational(double tol = 1e-9) const;

  // State at an absolute lattice position, as a pure function of (seed, pos).
  FiberState state_at(std::uint64_t seed, std::int64_t pos) const;

  // Sample the window [offset-K, offset+N] of lattice positions; fiber k of
  // the result sits at absolute position offset+k.
  FiberPath sample_path(std::uint64_t seed, std::int64_t K, std::int64_t N,
                        std::int64_t offset = 0) const;

 private:
  DrivingSystem() = default;
  Kind kind_ = Kind::Rotation;
  double alpha_ = 0.0;
  int alphabet_ = 0;
  std::vector<double> weights_;
  std::vector<std::vector<double>> markov_rows_;
  std::vector<double> markov_initial_;
  Assignment assign_;
};

}  // namespace ros
