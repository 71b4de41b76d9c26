#include "ros/driving.hpp"

#include <cmath>
#include <stdexcept>

#include "ros/rng.hpp"

namespace ros {

namespace {

// Zigzag-encode a signed lattice position into a key.
std::uint64_t pos_key(std::int64_t p) {
  return (static_cast<std::uint64_t>(p) << 1) ^ static_cast<std::uint64_t>(p >> 63);
}

constexpr std::uint64_t kBasePointKey = 0x7061746862617365ULL;
// Markov chains are rebuilt from a fixed anchor position so that windows of
// any size share the same realization.
constexpr std::int64_t kMarkovAnchor = -(1 << 20);

int weighted_pick(const std::vector<double>& w, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(w.size()) - 1;
}

void check_weights(const std::vector<double>& w) {
  double s = 0.0;
  for (double x : w) {
    if (x < 0.0) throw std::invalid_argument("symbol weights must be nonnegative");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw std::invalid_argument("symbol weights must sum to 1");
}

}  // namespace

double ObservableSpec::distance(double x) const {
  double d = std::abs(x - peak);
  if (circular) d = std::min(d, 1.0 - d);
  return d;
}

double ObservableSpec::eval(double x) const {
  double d = distance(x);
  return -std::log(std::max(d, 1e-300));
}

DrivingSystem DrivingSystem::rotation(double alpha, Assignment assign) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("rotation angle must lie in (0,1)");
  DrivingSystem d;
  d.kind_ = Kind::Rotation;
  d.alpha_ = alpha;
  d.assign_ = std::move(assign);
  return d;
}

DrivingSystem DrivingSystem::bernoulli_shift(int alphabet, std::vector<double> weights,
                                             Assignment assign) {
  if (alphabet < 2) throw std::invalid_argument("alphabet needs at least two symbols");
  if (static_cast<int>(weights.size()) != alphabet)
    throw std::invalid_argument("one weight per symbol required");
  check_weights(weights);
  DrivingSystem d;
  d.kind_ = Kind::BernoulliShift;
  d.alphabet_ = alphabet;
  d.weights_ = std::move(weights);
  d.assign_ = std::move(assign);
  return d;
}

DrivingSystem DrivingSystem::markov_shift(int alphabet,
                                          std::vector<std::vector<double>> rows,
                                          std::vector<double> initial, Assignment assign) {
  if (alphabet < 2) throw std::invalid_argument("alphabet needs at least two symbols");
  if (static_cast<int>(rows.size()) != alphabet ||
      static_cast<int>(initial.size()) != alphabet)
    throw std::invalid_argument("transition matrix shape mismatch");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != alphabet)
      throw std::invalid_argument("transition matrix shape mismatch");
    check_weights(row);
  }
  check_weights(initial);
  DrivingSystem d;
  d.kind_ = Kind::MarkovShift;
  d.alphabet_ = alphabet;
  d.markov_rows_ = std::move(rows);
  d.markov_initial_ = std::move(initial);
  d.assign_ = std::move(assign);
  return d;
}

bool DrivingSystem::rotation_angle_suspect_rational(double tol) const {
  if (kind_ != Kind::Rotation) return false;
  // Small-denominator check: alpha within tol of p/q for q <= 64.
  for (int q = 1; q <= 64; ++q) {
    double p = std::round(alpha_ * q);
    if (p >= 1.0 && std::abs(alpha_ - p / q) < tol) return true;
  }
  return false;
}

FiberState DrivingSystem::state_at(std::uint64_t seed, std::int64_t pos) const {
  FiberState st;
  switch (kind_) {
    case Kind::Rotation: {
      double base = keyed_uniform(seed, kBasePointKey);
      double a = base + static_cast<double>(pos) * alpha_;
      st.angle = a - std::floor(a);
      break;
    }
    case Kind::BernoulliShift: {
      st.symbol = weighted_pick(weights_, keyed_uniform(seed, pos_key(pos)));
      st.angle = static_cast<double>(st.symbol) / alphabet_;
      break;
    }
    case Kind::MarkovShift: {
      if (pos < kMarkovAnchor)
        throw std::out_of_range("position precedes the chain anchor");
      int s = weighted_pick(markov_initial_, keyed_uniform(seed, pos_key(kMarkovAnchor)));
      for (std::int64_t p = kMarkovAnchor + 1; p <= pos; ++p)
        s = weighted_pick(markov_rows_[static_cast<std::size_t>(s)],
                          keyed_uniform(seed, pos_key(p)));
      st.symbol = s;
      st.angle = static_cast<double>(s) / alphabet_;
      break;
    }
  }
  return st;
}

FiberPath DrivingSystem::sample_path(std::uint64_t seed, std::int64_t K, std::int64_t N,
                                     std::int64_t offset) const {
  if (K < 0 || N < 0) throw std::invalid_argument("window bounds must be nonnegative");
  FiberPath path(K, N, seed);
  if (kind_ == Kind::MarkovShift) {
    // One pass from the anchor instead of re-walking per position.
    std::int64_t lo = offset - K, hi = offset + N;
    int s = weighted_pick(markov_initial_, keyed_uniform(seed, pos_key(kMarkovAnchor)));
    for (std::int64_t p = kMarkovAnchor + 1; p <= hi; ++p) {
      s = weighted_pick(markov_rows_[static_cast<std::size_t>(s)],
                        keyed_uniform(seed, pos_key(p)));
      if (p >= lo) {
        FiberState st;
        st.symbol = s;
        st.angle = static_cast<double>(s) / alphabet_;
        Fiber& f = path.at(p - offset);
        f.state = st;
        f.par = assign_(st);
      }
    }
    if (lo <= kMarkovAnchor) throw std::out_of_range("window precedes the chain anchor");
    return path;
  }
  for (std::int64_t k = -K; k <= N; ++k) {
    Fiber& f = path.at(k);
    f.state = state_at(seed, offset + k);
    f.par = assign_(f.state);
  }
  return path;
}

}  // namespace ros
