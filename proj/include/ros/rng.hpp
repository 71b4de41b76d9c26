#pragma once

#include <cstdint>

namespace ros {

// Counter-based randomness.  Every draw is a pure function of (seed, key),
// so two windows sampled from the same seed agree wherever their index
// ranges overlap.  This is what makes shift-equivariance of sampled driving
// paths literally testable instead of merely plausible.
//
// The mixer is the splitmix64 finalizer applied to a combined 128->64 bit
// input; it passes the usual avalanche checks and is more than enough for
// Monte Carlo work here.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t key) {
  // Two rounds with asymmetric constants so that (seed,key) and (key,seed)
  // decorrelate.
  return mix64(seed ^ mix64(key ^ 0xd1b54a32d192ed03ULL));
}

// Uniform double in [0,1) from the top 53 bits.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t key) {
  return static_cast<double>(keyed_bits(seed, key) >> 11) * 0x1.0p-53;
}

// Sequential stream with the same backing mixer; used where a plain
// generator is more natural than per-index keys (e.g. Monte Carlo orbits).
// Worker w of a parallel loop uses Stream(seed, w) and owns its substream.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(mix64(seed ^ mix64(stream_id ^ 0x8e9c17c9e918f3abULL))), ctr_(0) {}

  std::uint64_t bits() { return keyed_bits(seed_, ctr_++); }
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return bits() % n; }

 private:
  std::uint64_t seed_;
  std::uint64_t ctr_;
};

// One Monte Carlo orbit step with a low-order-bit refresh.  Branch slopes
// that are exact powers of two shift one mantissa bit out per step, so a raw
// double orbit collapses onto the dyadic points (and then onto a spurious
// periodic cycle) after ~50 steps.  The dither is orders of magnitude below
// any hole width or grid cell used here, so the visit statistics are
// unchanged while the lost bits are replenished.
inline double dither_mod1(double x, Stream& st) {
  x += (st.uniform() - 0.5) * 0x1.0p-44;
  if (x >= 1.0) x -= 1.0;
  if (x < 0.0) x += 1.0;
  return x;
}

}  // namespace ros
