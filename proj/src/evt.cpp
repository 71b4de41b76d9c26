#include "ros/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ros/rng.hpp"

namespace ros {

namespace {

IntervalSet ball_around(const ObservableSpec& obs, double center, double radius) {
  IntervalSet s;
  if (obs.circular) {
    double c = center - std::floor(center);
    s = IntervalSet::circle_ball(c, radius);
  } else {
    s.assign({{center - radius, center + radius}});
  }
  return s;
}

void require_lebesgue_exact(const Fiber& fib) {
  if (fib.par.weight.r != 1.0 || !fib.par.map.preserves_lebesgue())
    throw std::invalid_argument(
        "exact step-function survivors need Lebesgue-preserving maps with r = 1");
}

const IntervalSet* rung_hole(const Fiber& fib, int rung) {
  if (rung < 0 || static_cast<std::size_t>(rung) >= fib.holes.size()) return nullptr;
  const IntervalSet& h = fib.holes[static_cast<std::size_t>(rung)];
  return h.empty() ? nullptr : &h;
}

}  // namespace

ThresholdReport solve_thresholds(FiberPath& path, std::int64_t lo, std::int64_t hi,
                                 const ScheduleOptions& opt, ThermoEngine* eng) {
  ThresholdReport rep;
  for (std::int64_t k = lo; k <= hi; ++k) {
    Fiber& fib = path.at(k);
    fib.holes.assign(opt.N_ladder.size(), IntervalSet{});
    double u = 2.0 * keyed_uniform(opt.jitter_seed,
                                   static_cast<std::uint64_t>(k + (1ll << 42))) -
               1.0;
    for (std::size_t r = 0; r < opt.N_ladder.size(); ++r) {
      double target = fib.par.t / opt.N_ladder[r];
      if (target >= 1.0)
        throw std::invalid_argument("degenerate threshold: hole would be everything");
      ScheduleRow row;
      row.k = k;
      row.rung = static_cast<int>(r);
      row.N = opt.N_ladder[r];
      row.t = fib.par.t;
      double center = fib.par.obs.peak;
      if (opt.jitter > 0.0) center += u * opt.jitter * std::sqrt(target) * (target / 2.0);
      if (eng) {
        double a = 0.0, b = 0.5, mu_mid = 0.0;
        for (int it = 0; it < 100; ++it) {
          double mid = 0.5 * (a + b);
          mu_mid = eng->mu0_measure(k, ball_around(fib.par.obs, center, mid));
          if (mu_mid < target)
            a = mid;
          else
            b = mid;
          if (b - a < 1e-16) break;
        }
        double radius = b;  // smallest radius attaining the target within tol
        IntervalSet hole = ball_around(fib.par.obs, center, radius);
        row.hole_measure = eng->mu0_measure(k, hole);
        row.z = -std::log(std::max(radius, 1e-300));
        row.xi = row.N * row.hole_measure - row.t;
        fib.holes[r] = std::move(hole);
      } else {
        require_lebesgue_exact(fib);
        double radius = target / 2.0;
        if (!fib.par.obs.circular &&
            (center - radius < 0.0 || center + radius > 1.0))
          throw std::invalid_argument("threshold ball leaves the interval");
        IntervalSet hole = ball_around(fib.par.obs, center, radius);
        row.hole_measure = hole.measure();
        row.z = -std::log(radius);
        row.xi = row.N * row.hole_measure - row.t;  // 0 up to round-off
        fib.holes[r] = std::move(hole);
      }
      rep.rows.push_back(row);
    }
    for (std::size_t r = 1; r < fib.holes.size(); ++r)
      if (!fib.holes[r].subset_of(fib.holes[r - 1])) rep.nested = false;
  }
  return rep;
}

double survivor_exact(const FiberPath& path, std::int64_t k0, int rung, int N,
                      bool mask_first, double merge_tol, const StepFn* start) {
  StepFn f = start ? *start : StepFn(1.0);
  for (int j = 0; j < N; ++j) {
    const Fiber& fib = path.at(k0 + j);
    require_lebesgue_exact(fib);
    if (mask_first) {
      if (const IntervalSet* h = rung_hole(fib, rung)) f = f.masked(h->complement());
      f = f.transfer(fib.par.map, fib.par.weight);
    } else {
      f = f.transfer(fib.par.map, fib.par.weight);
      const Fiber& next = path.at(k0 + j + 1);
      if (const IntervalSet* h = rung_hole(next, rung)) f = f.masked(h->complement());
    }
    if (merge_tol > 0.0) f.compress(merge_tol * std::max(f.sup(), 1e-300));
  }
  return f.integral();
}

std::vector<double> lambda_sequence_exact(const FiberPath& path, std::int64_t k0,
                                          int count, int rung, int burn_in,
                                          double merge_tol) {
  std::vector<double> out;
  out.reserve(count);
  StepFn f(1.0);
  for (std::int64_t j = k0 - burn_in; j < k0 + count; ++j) {
    const Fiber& fib = path.at(j);
    require_lebesgue_exact(fib);
    if (const IntervalSet* h = rung_hole(fib, rung)) f = f.masked(h->complement());
    f = f.transfer(fib.par.map, fib.par.weight);
    double lam = f.integral();
    if (lam <= 0.0) throw std::runtime_error("open cocycle lost all mass");
    f = f.scaled(1.0 / lam);
    if (merge_tol > 0.0) f.compress(merge_tol * std::max(f.sup(), 1e-300));
    if (j >= k0) out.push_back(lam);
  }
  return out;
}

double QhatSeries::sum() const {
  double s = 0.0;
  for (double q : qhat) s += q;
  return s;
}

QhatSeries qhat_series(const FiberPath& path, std::int64_t k, int rung, int k_max) {
  QhatSeries series;
  series.k = k;
  series.rung = rung;
  const IntervalSet* target = rung_hole(path.at(k), rung);
  if (!target) return series;  // excluded fiber (no hole mass)
  series.hole_measure = target->measure();
  for (int kk = 0; kk <= k_max; ++kk) {
    std::int64_t base = k - (kk + 1);
    const Fiber& fb = path.at(base);
    require_lebesgue_exact(fb);
    const IntervalSet* h0 = rung_hole(fb, rung);
    if (!h0) {
      series.qhat.push_back(0.0);
      continue;
    }
    StepFn f = StepFn::indicator(*h0);
    f = f.transfer(fb.par.map, fb.par.weight);
    for (std::int64_t j = base + 1; j < k; ++j) {
      const Fiber& fj = path.at(j);
      require_lebesgue_exact(fj);
      if (const IntervalSet* h = rung_hole(fj, rung)) f = f.masked(h->complement());
      f = f.transfer(fj.par.map, fj.par.weight);
    }
    series.qhat.push_back(f.integral_over(*target) / series.hole_measure);
  }
  return series;
}

std::vector<double> qhat_operator_form(ThermoEngine& eng, std::int64_t k, int rung,
                                       int k_max) {
  std::vector<double> out;
  const FiberPath& path = eng.path();
  double den = eng.delta(k, rung);
  if (den <= 0.0) return out;
  const std::size_t n = eng.grid();
  auto hole_cut = [&](std::int64_t j, const GridDensity& f) {
    const IntervalSet* h = rung_hole(path.at(j), rung);
    GridDensity out2 = GridDensity::constant(n, 0.0);
    if (!h) return out2;
    std::vector<double> mask = hole_mask(*h, n);
    out2 = f;
    for (std::size_t i = 0; i < n; ++i) out2.values[i] *= (1.0 - mask[i]);
    return out2;
  };
  for (int kk = 0; kk <= k_max; ++kk) {
    std::int64_t base = k - (kk + 1);
    const Fiber& fb = path.at(base);
    const TransferMatrix& Mb = eng.cache().matrix_for(fb.par.map, fb.par.weight);
    GridDensity f = Mb.apply(hole_cut(base, eng.fiber(base, -1).phi));
    for (std::int64_t j = base + 1; j < k; ++j) {
      const Fiber& fj = path.at(j);
      const TransferMatrix& Mj = eng.cache().matrix_for(fj.par.map, fj.par.weight);
      const IntervalSet* h = rung_hole(fj, rung);
      f = h ? Mj.apply_masked(f, hole_mask(*h, n)) : Mj.apply(f);
    }
    const Fiber& fk = path.at(k);
    const TransferMatrix& Mk = eng.cache().matrix_for(fk.par.map, fk.par.weight);
    double q = pairing(eng.nu0(k + 1), Mk.apply(hole_cut(k, f))) / den;
    double lam_prod = 1.0;
    for (int j = 1; j <= kk + 1; ++j) lam_prod *= eng.lambda(k - j, -1);
    out.push_back(q / lam_prod);
  }
  return out;
}

ThetaReport theta_estimate(const FiberPath& path, std::int64_t lo, std::int64_t hi,
                           int rung, int k_max) {
  ThetaReport rep;
  rep.k_max = k_max;
  rep.rung = rung;
  double th_acc = 0.0, tth_acc = 0.0, wsum_acc = 0.0, w_acc = 0.0;
  std::int64_t used = 0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    QhatSeries s = qhat_series(path, k, rung, k_max);
    if (s.hole_measure <= 0.0) continue;
    th_acc += s.theta();
    tth_acc += path.at(k).par.t * s.theta();
    wsum_acc += s.hole_measure * s.sum();
    w_acc += s.hole_measure;
    ++used;
    rep.fibers.push_back(std::move(s));
  }
  if (used > 0) {
    rep.theta_mean = th_acc / used;
    rep.t_theta_mean = tth_acc / used;
  }
  if (w_acc > 0.0) rep.weighted_qhat_sum = wsum_acc / w_acc;
  return rep;
}

GumbelReport gumbel_check(const FiberPath& path, int rung, int N, double target_rate,
                          ThermoEngine* eng) {
  GumbelReport rep;
  rep.nu_form = survivor_exact(path, 0, rung, N, true);
  std::vector<double> lams = lambda_sequence_exact(path, 0, N, rung);
  double log_prod = 0.0;
  for (double l : lams) log_prod += std::log(l);
  rep.lambda_ratio_form = std::exp(log_prod);
  if (eng) {
    const IntervalSet* h0 = rung_hole(path.at(0), rung);
    double width = h0 ? h0->measure() : 0.0;
    if (width * static_cast<double>(eng->grid()) >= 8.0) {
      // The grid resolves the hole: full grid-operator survivor.
      rep.mu_form = eng->survivor(0, rung, N, true);
    } else {
      // Sub-cell hole: the grid cannot represent the depleted structure the
      // hole carves inside its own cell, so only the equilibrium start comes
      // from the grid engine and the masked cocycle itself runs exactly.
      const GridDensity& phi0 = eng->fiber(0, -1).phi;
      std::vector<double> cuts(phi0.n + 1);
      for (std::size_t i = 0; i <= phi0.n; ++i)
        cuts[i] = static_cast<double>(i) / static_cast<double>(phi0.n);
      cuts.back() = 1.0;
      StepFn start(cuts, phi0.values);
      double mass = start.integral();
      rep.mu_form = mass > 0.0
                        ? survivor_exact(path, 0, rung, N, true, 1e-13, &start) / mass
                        : 0.0;
    }
  } else {
    rep.mu_form = rep.nu_form;
  }
  rep.target = std::exp(-target_rate);
  // Agreement budget: spectral boundary terms of the burn-in sweep plus the
  // grid drift of the mu-form; pinned and reported with every run.
  rep.budget = 0.01;
  return rep;
}

HittingReport hitting_time_mc(const FiberPath& path, int rung, std::size_t samples,
                              std::uint64_t seed, double rate,
                              const std::vector<int>& check_Ns) {
  HittingReport rep;
  rep.samples = samples;
  rep.rate = rate;
  const std::int64_t W = path.right();
  double scale_acc = 0.0;
  std::int64_t scale_cnt = std::min<std::int64_t>(W, 1000);
  for (std::int64_t k = 1; k <= scale_cnt; ++k) {
    const IntervalSet* h = rung_hole(path.at(k), rung);
    scale_acc += h ? h->measure() : 0.0;
  }
  rep.scale = scale_acc / static_cast<double>(scale_cnt);

  std::vector<double> scaled;
  scaled.reserve(samples);
  std::vector<std::size_t> over(check_Ns.size(), 0);
  for (std::size_t i = 0; i < samples; ++i) {
    Stream st(seed, i);
    double x = st.uniform();
    std::int64_t tau = 0;
    for (std::int64_t n = 1; n <= W; ++n) {
      x = dither_mod1(path.at(n - 1).par.map.eval(x), st);
      const IntervalSet* h = rung_hole(path.at(n), rung);
      if (h && h->contains(x)) {
        tau = n;
        break;
      }
    }
    if (tau == 0) {
      ++rep.exhausted;
      tau = W + 1;
    }
    for (std::size_t c = 0; c < check_Ns.size(); ++c)
      if (tau > check_Ns[c]) ++over[c];
    if (tau <= W) scaled.push_back(static_cast<double>(tau) * rep.scale);
  }
  std::sort(scaled.begin(), scaled.end());
  double n_total = static_cast<double>(samples);
  double d = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    double F = 1.0 - std::exp(-rate * scaled[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n_total - F));
    d = std::max(d, std::abs(F - static_cast<double>(i) / n_total));
  }
  rep.ks = d;
  for (std::size_t c = 0; c < check_Ns.size(); ++c) {
    HittingCheckRow row;
    row.N = check_Ns[c];
    row.mc_survival = static_cast<double>(over[c]) / n_total;
    row.op_survival = survivor_exact(path, 0, rung, check_Ns[c], false);
    row.sigma = std::sqrt(std::max(row.op_survival * (1.0 - row.op_survival), 1e-12) /
                          n_total);
    rep.rows.push_back(row);
  }
  return rep;
}

double husler_average(const ThresholdReport& rep, int rung) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& row : rep.rows) {
    if (row.rung != rung) continue;
    acc += row.t + row.xi;
    ++n;
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace ros
