#pragma once

#include <cstdint>

#include "ros/driving.hpp"
#include "ros/interval_map.hpp"

namespace ros::testing {

// A window whose every fiber carries the same map and weight; scaling,
// observables, and holes can be adjusted per fiber afterwards.
inline FiberPath const_path(std::int64_t K, std::int64_t N,
                            const PiecewiseAffineMap& m, double r,
                            std::uint64_t seed = 0) {
  FiberPath p(K, N, seed);
  for (std::int64_t k = -K; k <= N; ++k) {
    p.at(k).par.map = m;
    p.at(k).par.weight.r = r;
  }
  return p;
}

}  // namespace ros::testing
