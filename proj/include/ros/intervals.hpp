#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace ros {

// Closed subintervals of [0,1], kept sorted and pairwise disjoint.  Used for
// holes, branch images, and the exact set algebra behind survivor sets and
// return-time computations.  All endpoints are exact doubles; no grid
// snapping happens here.

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi > lo ? hi - lo : 0.0; }
};

class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts) { assign(std::move(parts)); }

  static IntervalSet whole() { return IntervalSet({{0.0, 1.0}}); }

  // Normalize an arbitrary collection: clip to [0,1], sort, merge overlaps.
  void assign(std::vector<Interval> parts) {
    items_.clear();
    for (auto& p : parts) {
      p.lo = std::max(0.0, p.lo);
      p.hi = std::min(1.0, p.hi);
      if (p.hi > p.lo) items_.push_back(p);
    }
    std::sort(items_.begin(), items_.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& p : items_) {
      if (!merged.empty() && p.lo <= merged.back().hi) {
        merged.back().hi = std::max(merged.back().hi, p.hi);
      } else {
        merged.push_back(p);
      }
    }
    items_ = std::move(merged);
  }

  // Arc on the circle: [c-rad, c+rad] mod 1, possibly split in two pieces.
  static IntervalSet circle_ball(double center, double radius) {
    center -= std::floor(center);
    double lo = center - radius, hi = center + radius;
    std::vector<Interval> parts;
    if (2.0 * radius >= 1.0) return whole();
    if (lo < 0.0) {
      parts.push_back({0.0, hi});
      parts.push_back({lo + 1.0, 1.0});
    } else if (hi > 1.0) {
      parts.push_back({lo, 1.0});
      parts.push_back({0.0, hi - 1.0});
    } else {
      parts.push_back({lo, hi});
    }
    return IntervalSet(std::move(parts));
  }

  const std::vector<Interval>& parts() const { return items_; }
  bool empty() const { return items_.empty(); }
  std::size_t component_count() const { return items_.size(); }

  double measure() const {
    double s = 0.0;
    for (const auto& p : items_) s += p.length();
    return s;
  }

  bool contains(double x) const {
    for (const auto& p : items_)
      if (x >= p.lo && x <= p.hi) return true;
    return false;
  }

  IntervalSet complement() const {
    std::vector<Interval> out;
    double prev = 0.0;
    for (const auto& p : items_) {
      if (p.lo > prev) out.push_back({prev, p.lo});
      prev = std::max(prev, p.hi);
    }
    if (prev < 1.0) out.push_back({prev, 1.0});
    return IntervalSet(std::move(out));
  }

  IntervalSet intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < items_.size() && j < other.items_.size()) {
      double lo = std::max(items_[i].lo, other.items_[j].lo);
      double hi = std::min(items_[i].hi, other.items_[j].hi);
      if (hi > lo) out.push_back({lo, hi});
      if (items_[i].hi < other.items_[j].hi) {
        ++i;
      } else {
        ++j;
      }
    }
    return IntervalSet(std::move(out));
  }

  IntervalSet unite(const IntervalSet& other) const {
    std::vector<Interval> all = items_;
    all.insert(all.end(), other.items_.begin(), other.items_.end());
    return IntervalSet(std::move(all));
  }

  // Subset test up to endpoint slack (measure-zero boundaries are free).
  bool subset_of(const IntervalSet& other, double slack = 1e-12) const {
    return intersect(other.complement()).measure() <= slack;
  }

  double symmetric_difference_measure(const IntervalSet& other) const {
    return intersect(other.complement()).measure() +
           other.intersect(complement()).measure();
  }

 private:
  std::vector<Interval> items_;
};

}  // namespace ros
