#include "ros/interval_map.hpp"

#include <cmath>
#include <sstream>

#include "ros/stepfn.hpp"

namespace ros {

PiecewiseAffineMap::PiecewiseAffineMap(std::vector<Branch> branches, std::string family,
                                       double param)
    : branches_(std::move(branches)), family_(std::move(family)), param_(param) {
  if (branches_.empty()) throw std::invalid_argument("map needs at least one branch");
  double prev = 0.0;
  for (const auto& br : branches_) {
    if (std::abs(br.a - prev) > 1e-12 || br.b <= br.a || br.slope == 0.0)
      throw std::invalid_argument("branch domains must partition [0,1)");
    prev = br.b;
  }
  if (std::abs(prev - 1.0) > 1e-12)
    throw std::invalid_argument("branch domains must end at 1");
}

std::size_t PiecewiseAffineMap::branch_index(double x) const {
  if (x >= branches_.back().a) return branches_.size() - 1;
  std::size_t lo = 0, hi = branches_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (branches_[mid].a <= x) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

double PiecewiseAffineMap::eval(double x) const {
  double y = branches_[branch_index(x)].eval(x);
  // Guard rounding at branch ends.
  if (y < 0.0) y = 0.0;
  if (y > 1.0) y = 1.0;
  return y;
}

std::vector<Preimage> PiecewiseAffineMap::preimages(double x) const {
  std::vector<Preimage> out;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const auto& br = branches_[i];
    Interval im = br.image();
    if (x < im.lo - 1e-14 || x > im.hi + 1e-14) continue;
    double y = br.inverse(x);
    if (y < br.a - 1e-12 || y > br.b + 1e-12) continue;
    out.push_back({std::clamp(y, br.a, br.b), i});
  }
  return out;
}

double PiecewiseAffineMap::max_abs_slope() const {
  double m = 0.0;
  for (const auto& br : branches_) m = std::max(m, std::abs(br.slope));
  return m;
}

double PiecewiseAffineMap::min_abs_slope() const {
  double m = std::abs(branches_.front().slope);
  for (const auto& br : branches_) m = std::min(m, std::abs(br.slope));
  return m;
}

bool PiecewiseAffineMap::is_surjective(double slack) const {
  IntervalSet im = image_of(IntervalSet::whole());
  return im.measure() >= 1.0 - slack;
}

bool PiecewiseAffineMap::preserves_lebesgue(double tol) const {
  // Evaluate sum over covering branches of 1/|slope| on the partition induced
  // by branch-image endpoints; the sum is piecewise constant there.
  std::vector<double> cuts{0.0, 1.0};
  for (const auto& br : branches_) {
    Interval im = br.image();
    cuts.push_back(im.lo);
    cuts.push_back(im.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] - cuts[k] < 1e-14) continue;
    double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    double s = 0.0;
    for (const auto& br : branches_) {
      Interval im = br.image();
      if (mid > im.lo && mid < im.hi) s += 1.0 / std::abs(br.slope);
    }
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

IntervalSet PiecewiseAffineMap::image_of(const IntervalSet& s) const {
  std::vector<Interval> out;
  for (const auto& part : s.parts()) {
    for (const auto& br : branches_) {
      double lo = std::max(part.lo, br.a);
      double hi = std::min(part.hi, br.b);
      if (hi <= lo) continue;
      double u = br.eval(lo), v = br.eval(hi);
      out.push_back(u < v ? Interval{u, v} : Interval{v, u});
    }
  }
  return IntervalSet(std::move(out));
}

IntervalSet PiecewiseAffineMap::preimage_of(const IntervalSet& s) const {
  std::vector<Interval> out;
  for (const auto& part : s.parts()) {
    for (const auto& br : branches_) {
      Interval im = br.image();
      double lo = std::max(part.lo, im.lo);
      double hi = std::min(part.hi, im.hi);
      if (hi <= lo) continue;
      double u = br.inverse(lo), v = br.inverse(hi);
      if (u > v) std::swap(u, v);
      out.push_back({std::max(u, br.a), std::min(v, br.b)});
    }
  }
  return IntervalSet(std::move(out));
}

double WeightFunction::branch_weight(const Branch& br) const {
  return std::pow(std::abs(br.slope), -r);
}

PiecewiseAffineMap make_example1_map(double s) {
  if (s <= 1.0) throw std::invalid_argument("central slope must exceed 1");
  const double half_gap = 0.5 * (1.0 - 1.0 / s);  // left branch width
  const double outer = 2.0 / (1.0 - 1.0 / s);     // outer slope magnitude
  std::vector<Branch> br(3);
  // decreasing from 1 to 0 on [0, half_gap)
  br[0] = {0.0, half_gap, -outer, 1.0, false};
  // central branch of slope s through the fixed point 1/2
  br[1] = {half_gap, 1.0 - half_gap, s, -(s - 1.0) / 2.0, false};
  // decreasing from 1 to 0 on [1-half_gap, 1]
  br[2] = {1.0 - half_gap, 1.0, -outer, outer, false};
  return PiecewiseAffineMap(std::move(br), "example1", s);
}

PiecewiseAffineMap make_beta_map(double beta, double r_shift) {
  if (beta < 2.0) throw std::invalid_argument("beta must be at least 2");
  if (r_shift < 0.0 || r_shift >= 1.0) throw std::invalid_argument("shift must lie in [0,1)");
  // Split [0,1) wherever beta*x + r crosses an integer.
  std::vector<double> cuts{0.0};
  for (int k = static_cast<int>(std::ceil(r_shift)); k < beta + r_shift; ++k) {
    double x = (static_cast<double>(k) - r_shift) / beta;
    if (x > 1e-15 && x < 1.0 - 1e-15) cuts.push_back(x);
  }
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Branch> br;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    int k = static_cast<int>(std::floor(beta * mid + r_shift));
    br.push_back({cuts[i], cuts[i + 1], beta, r_shift - static_cast<double>(k), k != 0});
  }
  return PiecewiseAffineMap(std::move(br), "beta", beta);
}

PiecewiseAffineMap make_tripling_map() { return make_beta_map(3.0, 0.0); }

// -------- standing-assumption checker ----------------------------------

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

AssumptionReport verify_assumptions(const std::vector<FiberSystem>& fibers, int n_prime,
                                    double cover_cap) {
  AssumptionReport rep;
  auto add = [&rep](std::string name, bool pass, std::string witness, int fiber = -1) {
    rep.conditions.push_back({std::move(name), pass, std::move(witness), fiber});
  };

  // Bounded derivative and branch count.
  double max_slope = 0.0, max_branches = 0.0;
  for (const auto& f : fibers) {
    max_slope = std::max(max_slope, f.map.max_abs_slope());
    max_branches = std::max(max_branches, static_cast<double>(f.map.branch_count()));
  }
  add("bounded-derivative", std::isfinite(max_slope),
      "sup |T'| = " + fmt(max_slope) + ", sup branches = " + fmt(max_branches));

  // Weight bounded above and below.
  double sup_g = 0.0, inf_g = 1e300;
  for (const auto& f : fibers) {
    for (const auto& br : f.map.branches()) {
      double g = f.weight.branch_weight(br);
      sup_g = std::max(sup_g, g);
      inf_g = std::min(inf_g, g);
    }
  }
  add("weight-bounded-above", sup_g < 1e300, "sup g = " + fmt(sup_g));
  add("weight-bounded-below", inf_g > 0.0, "inf g = " + fmt(inf_g));

  // Uniform covering: each branch cell of each fiber blows up to [0,1] under
  // the subsequent maps of the window within the cap.
  {
    bool ok = true;
    int worst_fiber = -1;
    double worst_time = 0.0;
    for (std::size_t i = 0; i < fibers.size() && ok; ++i) {
      for (const auto& br : fibers[i].map.branches()) {
        IntervalSet cur({{br.a, br.b}});
        double k = 0;
        std::size_t j = i;
        while (cur.measure() < 1.0 - 1e-12 && k < cover_cap) {
          cur = fibers[j].map.image_of(cur);
          j = (j + 1) % fibers.size();
          ++k;
        }
        if (cur.measure() < 1.0 - 1e-12) {
          ok = false;
          worst_fiber = static_cast<int>(i);
          break;
        }
        worst_time = std::max(worst_time, k);
      }
    }
    add("uniform-covering", ok, "max cover time = " + fmt(worst_time), worst_fiber);
  }

  // Hole ladders: nesting, uniform component bound, shrinking measure.
  {
    bool nested = true;
    int bad = -1;
    std::size_t max_comp = 0;
    double first_sup = 0.0, last_sup = 0.0;
    for (std::size_t i = 0; i < fibers.size(); ++i) {
      const auto& ladder = fibers[i].hole_ladder;
      for (std::size_t e = 0; e < ladder.size(); ++e) {
        max_comp = std::max(max_comp, ladder[e].component_count());
        if (e + 1 < ladder.size() && !ladder[e + 1].subset_of(ladder[e])) {
          nested = false;
          bad = static_cast<int>(i);
        }
      }
      if (!ladder.empty()) {
        first_sup = std::max(first_sup, ladder.front().measure());
        last_sup = std::max(last_sup, ladder.back().measure());
      }
    }
    add("hole-nesting", nested, nested ? "nested ladder" : "smaller hole escapes larger",
        bad);
    add("hole-component-bound", max_comp <= 8,
        "max components = " + fmt(static_cast<double>(max_comp)));
    add("hole-measure-shrinks", last_sup <= first_sup,
        "sup Leb(H): " + fmt(first_sup) + " -> " + fmt(last_sup));
  }

  // Full branch outside the hole (sufficient for nonempty survivor sets) and
  // surjectivity off the hole, at the largest hole of each ladder.
  {
    bool full_branch = true, onto = true;
    int bad_fb = -1, bad_onto = -1;
    for (std::size_t i = 0; i < fibers.size(); ++i) {
      if (fibers[i].hole_ladder.empty()) continue;
      const auto& hole = fibers[i].hole_ladder.front();
      bool found = false;
      for (const auto& br : fibers[i].map.branches()) {
        if (br.image().length() < 1.0 - 1e-12) continue;
        if (hole.intersect(IntervalSet({{br.a, br.b}})).measure() == 0.0) {
          found = true;
          break;
        }
      }
      if (!found) {
        full_branch = false;
        bad_fb = static_cast<int>(i);
      }
      IntervalSet off_hole = fibers[i].map.image_of(hole.complement());
      if (off_hole.measure() < 1.0 - 1e-12) {
        onto = false;
        bad_onto = static_cast<int>(i);
      }
    }
    add("full-branch-outside-hole", full_branch, "", bad_fb);
    add("surjective-off-hole", onto, "", bad_onto);
  }

  // Contraction inequality: 9 * sup_fibers |g^(n')|_inf-norm must stay below
  // inf_fibers inf L^{n'}_eps(1), with the largest hole inserted.
  {
    double sup_gn = 0.0, inf_Ln = 1e300;
    for (std::size_t i = 0; i < fibers.size(); ++i) {
      // sup of the n'-step weight product along the window starting at i
      double prod = 1.0;
      for (int k = 0; k < n_prime; ++k) {
        const auto& f = fibers[(i + k) % fibers.size()];
        double gmax = 0.0;
        for (const auto& br : f.map.branches())
          gmax = std::max(gmax, f.weight.branch_weight(br));
        prod *= gmax;
      }
      sup_gn = std::max(sup_gn, prod);
      // inf of the open n'-step operator applied to 1
      StepFn one(1.0);
      for (int k = 0; k < n_prime; ++k) {
        const auto& f = fibers[(i + k) % fibers.size()];
        StepFn cur = one;
        if (!f.hole_ladder.empty())
          cur = cur.masked(f.hole_ladder.front().complement());
        one = cur.transfer(f.map, f.weight);
        one.compress(0.0);
      }
      inf_Ln = std::min(inf_Ln, one.inf());
    }
    add("expansion-vs-weight", 9.0 * sup_gn < inf_Ln,
        "9*sup|g^(n')| = " + fmt(9.0 * sup_gn) + " vs inf L^{n'}1 = " + fmt(inf_Ln));
  }

  return rep;
}

}  // namespace ros
