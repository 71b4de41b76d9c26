#include "ros/limits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ros/rng.hpp"

namespace ros {

namespace {

// Cell-midpoint projection of a pointwise observable onto the grid.
std::vector<double> grid_values(const std::function<double(double)>& v, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = v((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return out;
}

double mu_mean(ThermoEngine& eng, std::int64_t k, const std::vector<double>& vg) {
  const std::vector<double>& nu = eng.nu0(k);
  const GridDensity& phi = eng.fiber(k, -1).phi;
  double acc = 0.0;
  for (std::size_t i = 0; i < vg.size(); ++i) acc += nu[i] * phi.values[i] * vg[i];
  return acc / static_cast<double>(vg.size());
}

double normal_cdf(double x, double sigma) {
  return 0.5 * (1.0 + std::erf(x / (sigma * std::sqrt(2.0))));
}

double ks_distance(std::vector<double>& sorted_samples,
                   const std::function<double(double)>& cdf) {
  std::sort(sorted_samples.begin(), sorted_samples.end());
  double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    double F = cdf(sorted_samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace

double sample_grid_density(const GridDensity& phi, double u) {
  // Inverse CDF over cells, uniform within the chosen cell.
  double total = 0.0;
  for (double v : phi.values) total += v;
  double target = u * total;
  double acc = 0.0;
  const std::size_t n = phi.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    double next = acc + phi.values[i];
    if (target < next || i + 1 == n) {
      double frac = phi.values[i] > 0.0 ? (target - acc) / phi.values[i] : 0.5;
      frac = std::clamp(frac, 0.0, 1.0);
      return (static_cast<double>(i) + frac) / static_cast<double>(n);
    }
    acc = next;
  }
  return 0.5;
}

VarianceReport variance_estimate(ThermoEngine& eng,
                                 const std::function<double(double)>& v,
                                 int lag_cutoff, std::int64_t base, int bases) {
  VarianceReport rep;
  rep.lags_used = lag_cutoff;
  const std::size_t n = eng.grid();
  std::vector<double> vg = grid_values(v, n);
  double sigma2_acc = 0.0, instant_acc = 0.0, tail_acc = 0.0;
  for (int b = 0; b < bases; ++b) {
    std::int64_t k0 = base + b;
    double m0 = mu_mean(eng, k0, vg);
    const GridDensity& phi = eng.fiber(k0, -1).phi;
    GridDensity g = phi;
    for (std::size_t i = 0; i < n; ++i) g.values[i] *= (vg[i] - m0);
    g.nonnegative = false;
    // Lag 0 term.
    const std::vector<double>& nu0v = eng.nu0(k0);
    double c0 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      c0 += nu0v[i] * phi.values[i] * (vg[i] - m0) * (vg[i] - m0);
    c0 /= static_cast<double>(n);
    double s2 = c0;
    double last = std::abs(c0), prev = std::abs(c0);
    for (int lag = 1; lag <= lag_cutoff; ++lag) {
      std::int64_t j = k0 + lag - 1;
      const Fiber& fib = eng.path().at(j);
      const TransferMatrix& M = eng.cache().matrix_for(fib.par.map, fib.par.weight);
      g = M.apply(g);
      double lam = eng.lambda(j, -1);
      for (double& x : g.values) x /= lam;
      double mlag = mu_mean(eng, k0 + lag, vg);
      const std::vector<double>& nul = eng.nu0(k0 + lag);
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        c += nul[i] * (vg[i] - mlag) * g.values[i];
      c /= static_cast<double>(n);
      s2 += 2.0 * c;
      prev = last;
      last = std::abs(c);
    }
    double kappa = (prev > 0.0 && last < prev) ? last / prev : 0.5;
    kappa = std::min(kappa, 0.95);
    tail_acc += 2.0 * last * kappa / (1.0 - kappa);
    sigma2_acc += s2;
    instant_acc += c0;
  }
  rep.sigma2 = sigma2_acc / bases;
  rep.var_instant = instant_acc / bases;
  rep.tail_bound = tail_acc / bases;
  return rep;
}

CltReport clt_check(ThermoEngine& eng, const std::function<double(double)>& v,
                    double sigma2, int n, std::size_t samples, std::uint64_t seed,
                    double sigma2_tol) {
  if (sigma2 < sigma2_tol)
    throw std::domain_error(
        "variance at coboundary scale: normalized sums do not obey a CLT");
  CltReport rep;
  rep.sigma2 = sigma2;
  rep.samples = samples;
  std::vector<double> vg = grid_values(v, eng.grid());
  std::vector<double> means(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) means[static_cast<std::size_t>(j)] = mu_mean(eng, j, vg);
  const GridDensity& phi0 = eng.fiber(0, -1).phi;
  const FiberPath& path = eng.path();
  std::vector<double> sums;
  sums.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    Stream st(seed, i);
    double x = sample_grid_density(phi0, st.uniform());
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      s += v(x) - means[static_cast<std::size_t>(j)];
      x = dither_mod1(path.at(j).par.map.eval(x), st);
    }
    sums.push_back(s / std::sqrt(static_cast<double>(n)));
  }
  double sigma = std::sqrt(sigma2);
  rep.ks = ks_distance(sums, [&](double x) { return normal_cdf(x, sigma); });
  return rep;
}

AzumaReport azuma_bound_check(ThermoEngine& eng,
                              const std::function<double(double)>& v,
                              const std::vector<double>& thresholds,
                              const std::vector<int>& horizons,
                              std::size_t samples, std::uint64_t seed) {
  AzumaReport rep;
  const std::size_t n = eng.grid();
  std::vector<double> vg = grid_values(v, n);
  double m0 = mu_mean(eng, 0, vg);
  for (double x : vg) rep.C2 = std::max(rep.C2, std::abs(x - m0));
  // Martingale remainder constant: summed sup norms of the normalized
  // operator applied to the centered observable (geometric by the gap).
  {
    GridDensity g = eng.fiber(0, -1).phi;
    for (std::size_t i = 0; i < n; ++i) g.values[i] *= (vg[i] - m0);
    g.nonnegative = false;
    for (int k = 0; k < 400; ++k) {
      double s = std::max(g.sup(), -g.inf());
      rep.C1 += s;
      if (s < 1e-13) break;
      const Fiber& fib = eng.path().at(k);
      const TransferMatrix& M = eng.cache().matrix_for(fib.par.map, fib.par.weight);
      g = M.apply(g);
      double lam = eng.lambda(k, -1);
      for (double& x : g.values) x /= lam;
    }
  }
  int n_max = *std::max_element(horizons.begin(), horizons.end());
  std::vector<double> means(static_cast<std::size_t>(n_max));
  for (int j = 0; j < n_max; ++j) means[static_cast<std::size_t>(j)] = mu_mean(eng, j, vg);
  const GridDensity& phi0 = eng.fiber(0, -1).phi;
  const FiberPath& path = eng.path();
  // counts[t][h]: samples with |S_n/n| > thresholds[t] at horizons[h].
  std::vector<std::vector<std::size_t>> counts(
      thresholds.size(), std::vector<std::size_t>(horizons.size(), 0));
  for (std::size_t i = 0; i < samples; ++i) {
    Stream st(seed, i);
    double x = sample_grid_density(phi0, st.uniform());
    double s = 0.0;
    std::size_t next_h = 0;
    std::vector<int> sorted_h = horizons;
    std::sort(sorted_h.begin(), sorted_h.end());
    for (int j = 0; j < n_max && next_h < sorted_h.size(); ++j) {
      s += v(x) - means[static_cast<std::size_t>(j)];
      x = dither_mod1(path.at(j).par.map.eval(x), st);
      while (next_h < sorted_h.size() && j + 1 == sorted_h[next_h]) {
        double dev = std::abs(s) / static_cast<double>(j + 1);
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
          if (dev > thresholds[t]) {
            auto it = std::find(horizons.begin(), horizons.end(), sorted_h[next_h]);
            ++counts[t][static_cast<std::size_t>(it - horizons.begin())];
          }
        }
        ++next_h;
      }
    }
  }
  double denom = 8.0 * (rep.C2 + 2.0 * rep.C1) * (rep.C2 + 2.0 * rep.C1);
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      AzumaRow row;
      row.threshold = thresholds[t];
      row.n = horizons[h];
      row.n0 = static_cast<int>(std::ceil(2.0 * rep.C1 / thresholds[t]));
      row.bound = 2.0 * std::exp(-thresholds[t] * thresholds[t] *
                                 static_cast<double>(row.n) / denom);
      row.empirical = static_cast<double>(counts[t][h]) / static_cast<double>(samples);
      row.applicable = row.n > row.n0;
      row.violated = row.applicable && row.empirical > row.bound;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

BcReport borel_cantelli_count(
    const std::function<const PiecewiseAffineMap&(std::int64_t)>& map_at,
    double center, double c, double exponent, std::size_t n_steps,
    std::size_t orbits, std::uint64_t seed) {
  BcReport rep;
  rep.orbits = orbits;
  if (exponent > 1.0) {
    // Summable target measures: the expected count stays bounded and the
    // ratio has no reason to settle at 1.
    rep.refused = true;
    return rep;
  }
  double expected = 0.0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    double r = c / std::pow(static_cast<double>(k), exponent);
    double lo = std::max(0.0, center - r), hi = std::min(1.0, center + r);
    expected += hi - lo;
  }
  rep.expected = expected;
  std::size_t hits = 0;
  for (std::size_t o = 0; o < orbits; ++o) {
    Stream st(seed, o);
    double x = st.uniform();
    for (std::size_t k = 1; k <= n_steps; ++k) {
      x = dither_mod1(map_at(static_cast<std::int64_t>(k - 1)).eval(x), st);
      double r = c / std::pow(static_cast<double>(k), exponent);
      if (std::abs(x - center) <= r) ++hits;
    }
  }
  rep.ratio = static_cast<double>(hits) / (static_cast<double>(orbits) * expected);
  // Sprindzuk-style fluctuation scale for a single orbit, shrunk by the
  // ensemble averaging.
  double theta = expected;
  rep.remainder_bound = std::sqrt(theta) * std::pow(std::log(theta + 2.0), 2.0) /
                        (theta * std::sqrt(static_cast<double>(orbits)));
  return rep;
}

double transfer_duality_residual(ThermoEngine& eng, std::int64_t k,
                                 const std::function<double(double)>& v,
                                 std::uint64_t seed, int probes) {
  const std::size_t n = eng.grid();
  std::vector<double> vg = grid_values(v, n);
  const std::vector<double>& nuk = eng.nu0(k);
  const std::vector<double>& nuk1 = eng.nu0(k + 1);
  const GridDensity& phik = eng.fiber(k, -1).phi;
  const GridDensity& phik1 = eng.fiber(k + 1, -1).phi;
  const Fiber& fib = eng.path().at(k);
  const TransferMatrix& M = eng.cache().matrix_for(fib.par.map, fib.par.weight);
  double lam = eng.lambda(k, -1);

  // Conditional-expectation push of v: L(v*phi_k) / (lam * phi_{k+1}).
  GridDensity vphi = phik;
  for (std::size_t i = 0; i < n; ++i) vphi.values[i] *= vg[i];
  vphi.nonnegative = false;
  GridDensity pushed = M.apply(vphi);
  std::vector<double> pv(n);
  for (std::size_t i = 0; i < n; ++i)
    pv[i] = pushed.values[i] / (lam * std::max(phik1.values[i], 1e-300));

  double worst = 0.0;
  Stream st(seed, 0x6c);
  for (int p = 0; p < probes; ++p) {
    // Block-constant probe on the next fiber; the two sides integrate it in
    // genuinely different ways (pointwise composition vs adjoint push).
    const int blocks = 16;
    std::vector<double> bv(static_cast<std::size_t>(blocks));
    for (double& x : bv) x = st.uniform() - 0.5;
    auto probe = [&](double x) {
      int b = std::min<int>(blocks - 1, static_cast<int>(x * blocks));
      return bv[static_cast<std::size_t>(std::max(0, b))];
    };
    // mu_{k+1}(Pv * g), operator side.
    double rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mid = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      rhs += nuk1[i] * phik1.values[i] * pv[i] * probe(mid);
    }
    rhs /= static_cast<double>(n);
    // mu_k(v * (g o T)), direct quadrature with the pointwise composition.
    // Exact when the preimages of the probe's block boundaries are grid
    // points (the aligned configurations used in the tests).
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mid = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      lhs += nuk[i] * phik.values[i] * vg[i] * probe(fib.par.map.eval(mid));
    }
    lhs /= static_cast<double>(n);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace ros
