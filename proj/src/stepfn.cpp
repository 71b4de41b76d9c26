#include "ros/stepfn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ros {

namespace {

// Deduplicate a sorted breakpoint list, pinning the ends to 0 and 1.
std::vector<double> clean_cuts(std::vector<double> cuts) {
  for (auto& c : cuts) c = std::clamp(c, 0.0, 1.0);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out;
  out.push_back(0.0);
  for (double c : cuts) {
    if (c > out.back()) out.push_back(c);
  }
  if (out.back() < 1.0) out.push_back(1.0);
  else out.back() = 1.0;
  return out;
}

}  // namespace

StepFn::StepFn(double value) : cuts_{0.0, 1.0}, vals_{value} {}

StepFn::StepFn(std::vector<double> cuts, std::vector<double> vals)
    : cuts_(std::move(cuts)), vals_(std::move(vals)) {
  if (cuts_.size() != vals_.size() + 1 || cuts_.front() != 0.0 || cuts_.back() != 1.0)
    throw std::invalid_argument("StepFn: inconsistent cuts/vals");
}

StepFn StepFn::indicator(const IntervalSet& s) {
  std::vector<double> cuts;
  for (const auto& p : s.parts()) {
    cuts.push_back(p.lo);
    cuts.push_back(p.hi);
  }
  cuts = clean_cuts(std::move(cuts));
  std::vector<double> vals(cuts.size() - 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    vals[i] = s.contains(mid) ? 1.0 : 0.0;
  }
  return StepFn(std::move(cuts), std::move(vals));
}

double StepFn::eval(double x) const {
  if (x <= 0.0) return vals_.front();
  if (x >= 1.0) return vals_.back();
  // cell i covers [cuts_[i], cuts_[i+1])
  auto it = std::upper_bound(cuts_.begin(), cuts_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - cuts_.begin()) - 1;
  if (i >= vals_.size()) i = vals_.size() - 1;
  return vals_[i];
}

double StepFn::integral() const {
  double s = 0.0;
  for (std::size_t i = 0; i < vals_.size(); ++i)
    s += vals_[i] * (cuts_[i + 1] - cuts_[i]);
  return s;
}

double StepFn::sup() const { return *std::max_element(vals_.begin(), vals_.end()); }
double StepFn::inf() const { return *std::min_element(vals_.begin(), vals_.end()); }

double StepFn::total_variation() const {
  double tv = 0.0;
  for (std::size_t i = 1; i < vals_.size(); ++i) tv += std::abs(vals_[i] - vals_[i - 1]);
  return tv;
}

StepFn StepFn::scaled(double c) const {
  StepFn out = *this;
  for (auto& v : out.vals_) v *= c;
  return out;
}

namespace {

// Walk two step functions over the merged breakpoint list, combining values.
template <class Op>
StepFn combine(const StepFn& f, const StepFn& g, Op op) {
  const auto& cf = f.cuts();
  const auto& cg = g.cuts();
  std::vector<double> cuts;
  cuts.reserve(cf.size() + cg.size());
  std::merge(cf.begin(), cf.end(), cg.begin(), cg.end(), std::back_inserter(cuts));
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> vals(cuts.size() - 1);
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    while (i + 1 < f.vals().size() && cf[i + 1] <= cuts[k]) ++i;
    while (j + 1 < g.vals().size() && cg[j + 1] <= cuts[k]) ++j;
    vals[k] = op(f.vals()[i], g.vals()[j]);
  }
  return StepFn(std::move(cuts), std::move(vals));
}

}  // namespace

double StepFn::pair(const StepFn& g) const {
  return combine(*this, g, [](double a, double b) { return a * b; }).integral();
}

StepFn StepFn::plus(const StepFn& g, double gscale) const {
  return combine(*this, g, [gscale](double a, double b) { return a + gscale * b; });
}

StepFn StepFn::times(const StepFn& g) const {
  return combine(*this, g, [](double a, double b) { return a * b; });
}

StepFn StepFn::masked(const IntervalSet& keep) const {
  return times(StepFn::indicator(keep));
}

double StepFn::integral_over(const IntervalSet& s) const {
  return masked(s).integral();
}

StepFn StepFn::transfer(const PiecewiseAffineMap& map, const WeightFunction& w) const {
  // Output breakpoints: images of our breakpoints (via the branch owning
  // them) plus every branch-image endpoint.
  std::vector<double> cuts;
  cuts.reserve(cuts_.size() + 2 * map.branch_count());
  for (const auto& br : map.branches()) {
    Interval im = br.image();
    cuts.push_back(im.lo);
    cuts.push_back(im.hi);
    // breakpoints of f inside this branch's domain
    auto lo_it = std::lower_bound(cuts_.begin(), cuts_.end(), br.a);
    auto hi_it = std::upper_bound(cuts_.begin(), cuts_.end(), br.b);
    for (auto it = lo_it; it != hi_it; ++it) {
      double y = br.eval(*it);
      cuts.push_back(std::clamp(y, 0.0, 1.0));
    }
  }
  cuts = clean_cuts(std::move(cuts));

  std::vector<double> vals(cuts.size() - 1, 0.0);
  for (const auto& br : map.branches()) {
    const double g = w.branch_weight(br);
    Interval im = br.image();
    // Output cells covered by this branch image form a contiguous block;
    // the preimage y of the cell midpoint moves monotonically across it, so
    // a sweeping cursor into our own cells replaces per-cell binary search.
    std::size_t k_lo = static_cast<std::size_t>(
        std::upper_bound(cuts.begin(), cuts.end(), im.lo) - cuts.begin());
    if (k_lo > 0) --k_lo;
    const bool increasing = br.slope > 0.0;
    std::size_t cursor = increasing ? 0 : vals_.size() - 1;
    auto step_cursor_to = [&](double y) {
      if (increasing) {
        while (cursor + 1 < vals_.size() && cuts_[cursor + 1] <= y) ++cursor;
      } else {
        while (cursor > 0 && cuts_[cursor] > y) --cursor;
      }
    };
    if (increasing) {
      cursor = 0;
    } else {
      cursor = vals_.size() - 1;
    }
    for (std::size_t k = k_lo; k + 1 < cuts.size(); ++k) {
      double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      if (mid <= im.lo) continue;
      if (mid >= im.hi) break;
      double y = br.inverse(mid);
      step_cursor_to(y);
      vals[k] += g * vals_[cursor];
    }
  }
  StepFn out(std::move(cuts), std::move(vals));
  return out;
}

StepFn StepFn::compose_with(const PiecewiseAffineMap& map) const {
  // Breakpoints of f(T(x)): branch domain endpoints plus preimages of f's
  // breakpoints inside each branch.
  std::vector<double> cuts;
  for (const auto& br : map.branches()) {
    cuts.push_back(br.a);
    cuts.push_back(br.b);
    Interval im = br.image();
    for (double c : cuts_) {
      if (c > im.lo && c < im.hi) cuts.push_back(br.inverse(c));
    }
  }
  cuts = clean_cuts(std::move(cuts));
  std::vector<double> vals(cuts.size() - 1);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    vals[k] = eval(map.eval(mid));
  }
  return StepFn(std::move(cuts), std::move(vals));
}

void StepFn::compress(double tol) {
  std::vector<double> cuts;
  std::vector<double> vals;
  cuts.push_back(0.0);
  for (std::size_t i = 0; i < vals_.size(); ++i) {
    if (cuts_[i + 1] <= cuts.back()) continue;  // empty cell
    if (!vals.empty() && std::abs(vals.back() - vals_[i]) <= tol) {
      cuts.back() = cuts_[i + 1];  // extend previous cell
      continue;
    }
    vals.push_back(vals_[i]);
    cuts.push_back(cuts_[i + 1]);
  }
  if (vals.empty()) {
    vals.push_back(vals_.empty() ? 0.0 : vals_.back());
    cuts = {0.0, 1.0};
  }
  cuts.back() = 1.0;
  cuts_ = std::move(cuts);
  vals_ = std::move(vals);
}

}  // namespace ros
