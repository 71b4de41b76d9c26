#include "ros/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ros/rng.hpp"

namespace ros {

namespace {

void normalize_mean(std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  s /= static_cast<double>(w.size());
  if (s <= 0.0) throw std::runtime_error("adjoint sweep lost positivity");
  for (double& v : w) v /= s;
}

double sup_diff(const GridDensity& a, const GridDensity& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

ThermoEngine::ThermoEngine(const FiberPath& path, std::size_t grid, int depth)
    : path_(path), cache_(grid), depth_(depth) {}

const IntervalSet* ThermoEngine::hole_at(std::int64_t k, int eps) const {
  if (eps < 0) return nullptr;
  const auto& holes = path_.at(k).holes;
  if (static_cast<std::size_t>(eps) >= holes.size()) return nullptr;
  const IntervalSet& h = holes[static_cast<std::size_t>(eps)];
  return h.empty() ? nullptr : &h;
}

const std::vector<double>& ThermoEngine::nu0(std::int64_t k) {
  auto it = nu0_.find(k);
  if (it != nu0_.end()) return it->second;
  // Backward adjoint sweep from as deep on the right as the window allows;
  // cache every fiber visited on the way so neighbouring requests are free.
  int d = static_cast<int>(std::min<std::int64_t>(depth_, path_.right() - k));
  if (d < 1) throw std::out_of_range("no room to the right of fiber for the adjoint sweep");
  std::vector<double> w(grid(), 1.0);
  for (std::int64_t j = k + d - 1; j >= k; --j) {
    const Fiber& fib = path_.at(j);
    w = cache_.matrix_for(fib.par.map, fib.par.weight).apply_transpose(w);
    normalize_mean(w);
    // Only cache fibers that have seen at least half the sweep depth; the
    // shallow tail near the start of the sweep is not converged yet.
    std::int64_t applied = (k + d - 1) - j + 1;
    if (applied * 2 >= d) nu0_.emplace(j, w);
  }
  return nu0_.at(k);
}

GridDensity ThermoEngine::pullback_phi(std::int64_t k, int eps, int depth_used) {
  GridDensity f = GridDensity::constant(grid(), 1.0);
  for (std::int64_t j = k - depth_used; j < k; ++j) {
    const Fiber& fib = path_.at(j);
    const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
    const IntervalSet* h = hole_at(j, eps);
    f = h ? M.apply_masked(f, hole_mask(*h, grid())) : M.apply(f);
    double s = f.integral();
    if (s <= 0.0) throw std::runtime_error("density sweep lost all mass (hole too large?)");
    for (double& v : f.values) v /= s;
  }
  return f;
}

const ThermoFiberData& ThermoEngine::fiber(std::int64_t k, int eps) {
  auto key = std::make_pair(k, eps);
  auto it = fibers_.find(key);
  if (it != fibers_.end()) return it->second;

  int d = static_cast<int>(std::min<std::int64_t>(depth_, k - path_.left()));
  if (d < 1) throw std::out_of_range("no room to the left of fiber for the density sweep");
  GridDensity phi = pullback_phi(k, eps, d);
  // Scale so the closed functional at k pairs to 1.
  const std::vector<double>& nuk = nu0(k);
  double p = pairing(nuk, phi);
  if (p <= 0.0) throw std::runtime_error("conformal pairing non-positive");
  for (double& v : phi.values) v /= p;

  const Fiber& fib = path_.at(k);
  const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
  const IntervalSet* h = hole_at(k, eps);
  GridDensity pushed = h ? M.apply_masked(phi, hole_mask(*h, grid())) : M.apply(phi);
  double lam = pairing(nu0(k + 1), pushed);

  ThermoFiberData data;
  data.k = k;
  data.eps = eps;
  data.lambda = lam;
  data.phi = std::move(phi);
  data.pull_depth = d;
  data.normalization_residual = std::abs(pairing(nuk, data.phi) - 1.0);
  return fibers_.emplace(key, std::move(data)).first->second;
}

double ThermoEngine::mu0_measure(std::int64_t k, const IntervalSet& s) {
  const ThermoFiberData& f0 = fiber(k, -1);
  const std::vector<double>& nuk = nu0(k);
  std::vector<double> mask = hole_mask(s, grid());  // fraction outside s
  double m = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    m += nuk[i] * f0.phi.values[i] * (1.0 - mask[i]);
  return m / static_cast<double>(grid());
}

double ThermoEngine::delta(std::int64_t k, int eps) {
  const IntervalSet* h = hole_at(k, eps);
  if (!h) return 0.0;
  const ThermoFiberData& f0 = fiber(k, -1);
  std::vector<double> mask = hole_mask(*h, grid());
  GridDensity cut = f0.phi;
  for (std::size_t i = 0; i < mask.size(); ++i) cut.values[i] *= (1.0 - mask[i]);
  const Fiber& fib = path_.at(k);
  const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
  return pairing(nu0(k + 1), M.apply(cut));
}

double ThermoEngine::eta(std::int64_t k, int eps) {
  const IntervalSet* h = hole_at(k, eps);
  if (!h) return 0.0;
  const Fiber& fib = path_.at(k);
  const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
  std::vector<double> back = M.apply_transpose(nu0(k + 1));
  std::vector<double> mask = hole_mask(*h, grid());
  double s = 0.0;
  for (std::size_t j = 0; j < back.size(); ++j)
    s += std::abs(back[j] * (1.0 - mask[j]));
  return s / static_cast<double>(grid());
}

double ThermoEngine::survivor(std::int64_t k, int eps, int N, bool mu_version) {
  // nu_{k,0}(X) = nu_{k+N,0}(L^N_eps f) / lambda^N_0 with lambda^N_0 =
  // nu_{k+N,0}(L^N_0 phi_k); forming the ratio needs only the endpoint
  // functional, not per-fiber multipliers.
  const GridDensity& phi0 = fiber(k, -1).phi;
  GridDensity f_open = mu_version ? phi0 : GridDensity::constant(grid(), 1.0);
  GridDensity f_closed = phi0;
  double log_open = 0.0, log_closed = 0.0;
  for (int s = 0; s < N; ++s) {
    const Fiber& fib = path_.at(k + s);
    const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
    const IntervalSet* h = hole_at(k + s, eps);
    f_open = h ? M.apply_masked(f_open, hole_mask(*h, grid())) : M.apply(f_open);
    f_closed = M.apply(f_closed);
    double mo = f_open.integral();
    if (mo <= 0.0) return 0.0;
    log_open += std::log(mo);
    for (double& v : f_open.values) v /= mo;
    double mc = f_closed.integral();
    log_closed += std::log(mc);
    for (double& v : f_closed.values) v /= mc;
  }
  const std::vector<double>& nuN = nu0(k + N);
  double top = pairing(nuN, f_open);
  double bot = pairing(nuN, f_closed);
  if (top <= 0.0 || bot <= 0.0) return 0.0;
  return std::exp(std::log(top) + log_open - std::log(bot) - log_closed);
}

double ThermoEngine::survivor_spectral(std::int64_t k, int eps, int N,
                                       bool mu_version) {
  double log_ratio = 0.0;
  for (int s = 0; s < N; ++s) {
    double le = fiber(k + s, eps).lambda;
    if (le <= 0.0) return 0.0;
    log_ratio += std::log(le) - std::log(fiber(k + s, -1).lambda);
  }
  // Masked adjoint sweep for nu_{k,eps}, scaled so it pairs to 1 with the
  // perturbed equivariant density at k.
  int d = static_cast<int>(std::min<std::int64_t>(depth_, path_.right() - k));
  std::vector<double> w(grid(), 1.0);
  for (std::int64_t j = k + d - 1; j >= k; --j) {
    const Fiber& fib = path_.at(j);
    const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
    const IntervalSet* h = hole_at(j, eps);
    w = h ? M.apply_transpose_masked(w, hole_mask(*h, grid()))
          : M.apply_transpose(w);
    normalize_mean(w);
  }
  const ThermoFiberData& fe = fiber(k, eps);
  double scale = pairing(w, fe.phi);
  if (scale <= 0.0) return 0.0;
  GridDensity probe =
      mu_version ? fiber(k, -1).phi : GridDensity::constant(grid(), 1.0);
  return std::exp(log_ratio) * pairing(w, probe) / scale;
}

std::vector<double> ThermoEngine::lambda_sequence(std::int64_t k0, int count,
                                                  int eps) {
  std::vector<double> out;
  out.reserve(count);
  for (int j = 0; j < count; ++j) out.push_back(fiber(k0 + j, eps).lambda);
  return out;
}

EscapeRateReport ThermoEngine::escape_rate(const std::vector<int>& rungs,
                                           int window, int fit_horizon) {
  EscapeRateReport rep;
  for (int eps : rungs) {
    EscapeRateRow row;
    row.eps = eps;
    double acc = 0.0, mu_acc = 0.0;
    for (int j = 0; j < window; ++j) {
      double l0 = fiber(j, -1).lambda;
      double le = fiber(j, eps).lambda;
      acc += std::log(l0) - std::log(le);
      const IntervalSet* h = hole_at(j, eps);
      mu_acc += h ? mu0_measure(j, *h) : 0.0;
    }
    row.R_birkhoff = acc / window;
    row.mu_hole_avg = mu_acc / window;
    // Decay fit of the log survivor curve over the second half of the
    // horizon (burn-in discards the boundary term).
    std::vector<double> xs, ys;
    for (int N = fit_horizon / 2; N <= fit_horizon; N += std::max(1, fit_horizon / 10)) {
      double s = survivor(0, eps, N, false);
      if (s <= 0.0) continue;
      xs.push_back(N);
      ys.push_back(std::log(s));
    }
    row.R_fit = xs.size() >= 2 ? -ls_slope(xs, ys) : 0.0;
    row.ratio = row.mu_hole_avg > 0.0 ? row.R_birkhoff / row.mu_hole_avg : 0.0;
    rep.rows.push_back(row);
  }
  // Richardson extrapolation assuming first-order error in the hole size.
  if (rep.rows.size() >= 2) {
    const auto& a = rep.rows[rep.rows.size() - 2];
    const auto& b = rep.rows.back();
    double ha = a.mu_hole_avg, hb = b.mu_hole_avg;
    if (ha > hb && hb > 0.0)
      rep.extrapolated_ratio = (ha * b.ratio - hb * a.ratio) / (ha - hb);
    else
      rep.extrapolated_ratio = b.ratio;
  } else if (!rep.rows.empty()) {
    rep.extrapolated_ratio = rep.rows.back().ratio;
  }
  return rep;
}

DecayEstimate ThermoEngine::decay_rate(std::int64_t k, int eps, int probes,
                                       int steps, std::uint64_t seed) {
  DecayEstimate est;
  std::vector<double> xs, ys;
  Stream rng(seed, 0x9e3779b9u);
  for (int p = 0; p < probes; ++p) {
    GridDensity f = GridDensity::constant(grid(), 0.0);
    for (double& v : f.values) v = rng.uniform() - 0.5;
    f.nonnegative = false;
    // Project out the leading direction so only the remainder evolves.
    double c = pairing(nu0(k), f);
    const GridDensity& phi = fiber(k, eps).phi;
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] -= c * phi.values[i];
    double base = f.sup() > -f.inf() ? f.sup() : -f.inf();
    if (base <= 0.0) continue;
    for (int s = 0; s < steps; ++s) {
      const Fiber& fib = path_.at(k + s);
      const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
      const IntervalSet* h = hole_at(k + s, eps);
      f = h ? M.apply_masked(f, hole_mask(*h, grid())) : M.apply(f);
      double lam = fiber(k + s, eps).lambda;
      for (double& v : f.values) v /= lam;
      double c2 = pairing(nu0(k + s + 1), f);
      const GridDensity& phin = fiber(k + s + 1, eps).phi;
      for (std::size_t i = 0; i < f.values.size(); ++i)
        f.values[i] -= c2 * phin.values[i];
      double norm = std::max(f.sup(), -f.inf());
      if (norm <= 0.0) break;
      if (s >= steps / 2) {
        xs.push_back(s + 1);
        ys.push_back(std::log(norm / base));
      }
    }
  }
  if (xs.size() >= 2) {
    double slope = ls_slope(xs, ys);
    est.kappa = std::exp(slope);
    double my = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      my += ys[i];
      mx += xs[i];
    }
    est.D = std::exp(my / ys.size() - slope * mx / xs.size());
  }
  return est;
}

CondInvariantReport ThermoEngine::conditionally_invariant(std::int64_t k, int eps,
                                                          int test_sets) {
  CondInvariantReport rep;
  const ThermoFiberData& fe = fiber(k, eps);
  const IntervalSet* h = hole_at(k, eps);
  GridDensity rho = fe.phi;
  if (h) {
    std::vector<double> mask = hole_mask(*h, grid());
    for (std::size_t i = 0; i < rho.values.size(); ++i) rho.values[i] *= mask[i];
  }
  double mass = pairing(nu0(k), rho);
  if (mass <= 0.0) throw std::runtime_error("hole swallows the conditionally invariant support");
  for (double& v : rho.values) v /= mass;
  rep.sup_density = rho.sup();
  double inf_off = rho.sup();
  std::vector<double> keep = h ? hole_mask(*h, grid()) : std::vector<double>(grid(), 1.0);
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (keep[i] > 0.5) inf_off = std::min(inf_off, rho.values[i]);
  rep.inf_off_hole = inf_off;

  const Fiber& fib = path_.at(k);
  const TransferMatrix& M = cache_.matrix_for(fib.par.map, fib.par.weight);
  GridDensity pushed = h ? M.apply_masked(rho, hole_mask(*h, grid())) : M.apply(rho);
  double denom = pairing(nu0(k + 1), pushed);
  rep.multiplier = denom;

  // Next-fiber conditionally invariant density, same construction.
  const ThermoFiberData& fe1 = fiber(k + 1, eps);
  const IntervalSet* h1 = hole_at(k + 1, eps);
  GridDensity rho1 = fe1.phi;
  if (h1) {
    std::vector<double> m1 = hole_mask(*h1, grid());
    for (std::size_t i = 0; i < rho1.values.size(); ++i) rho1.values[i] *= m1[i];
  }
  double mass1 = pairing(nu0(k + 1), rho1);
  for (double& v : rho1.values) v /= mass1;

  const std::vector<double>& nun = nu0(k + 1);
  double worst = 0.0;
  for (int a = 0; a < test_sets; ++a) {
    double lo = static_cast<double>(a) / test_sets;
    double hi = static_cast<double>(a + 1) / test_sets;
    std::size_t i0 = static_cast<std::size_t>(lo * grid());
    std::size_t i1 = static_cast<std::size_t>(hi * grid());
    double num = 0.0, next = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
      num += nun[i] * pushed.values[i];
      next += nun[i] * rho1.values[i];
    }
    num /= static_cast<double>(grid());
    next /= static_cast<double>(grid());
    worst = std::max(worst, std::abs(num / denom - next));
  }
  rep.max_residual = worst;
  rep.density = std::move(rho);
  return rep;
}

double ThermoEngine::certify_depth(std::int64_t k, int eps, int extra) {
  const ThermoFiberData& base = fiber(k, eps);
  int d2 = base.pull_depth + extra;
  if (k - d2 < path_.left()) d2 = static_cast<int>(k - path_.left());
  GridDensity deeper = pullback_phi(k, eps, d2);
  double p = pairing(nu0(k), deeper);
  for (double& v : deeper.values) v /= p;
  return sup_diff(base.phi, deeper);
}

}  // namespace ros
