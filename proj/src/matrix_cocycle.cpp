#include "ros/matrix_cocycle.hpp"

#include <cmath>
#include <stdexcept>

#include "ros/rng.hpp"

namespace ros {

namespace {

Eigen::VectorXd normalized_sum(Eigen::VectorXd v) {
  double s = v.sum();
  if (s <= 0.0) throw std::runtime_error("matrix cocycle sweep lost positivity");
  return v / s;
}

}  // namespace

double extrapolate_to_zero(const std::vector<double>& x, const std::vector<double>& y) {
  // Neville's scheme evaluated at 0.
  std::vector<double> t = y;
  const std::size_t n = x.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      double xi = x[i], xj = x[i + level];
      t[i] = (xi * t[i + 1] - xj * t[i]) / (xi - xj);
    }
  }
  return t.empty() ? 0.0 : t[0];
}

MatrixCocycle random_positive_cocycle(int d, std::uint64_t seed, std::int64_t K,
                                      std::int64_t N, std::vector<double> eps_ladder,
                                      double degenerate_fraction) {
  if (d < 2) throw std::invalid_argument("dimension must be at least 2");
  MatrixCocycle c;
  c.d = d;
  c.K = K;
  c.N = N;
  c.eps_ladder = std::move(eps_ladder);
  c.closed.reserve(static_cast<std::size_t>(K + N + 1));
  c.mask_dir.reserve(static_cast<std::size_t>(K + N + 1));
  for (std::int64_t k = -K; k <= N; ++k) {
    Stream st(seed, static_cast<std::uint64_t>(k + (1ll << 40)));
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = 0.5 + st.uniform();
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
    if (st.uniform() >= degenerate_fraction)
      dir(static_cast<int>(st.below(static_cast<std::uint64_t>(d)))) = 1.0;
    c.closed.push_back(std::move(m));
    c.mask_dir.push_back(std::move(dir));
  }
  return c;
}

MatrixCocycle adversarial_cocycle(int d, std::uint64_t seed, std::int64_t K,
                                  std::int64_t N, std::vector<double> eps_ladder,
                                  double column_mass) {
  MatrixCocycle c = random_positive_cocycle(d, seed, K, N, std::move(eps_ladder), 0.0);
  // Every fiber masks the same coordinate, and that coordinate is starved by
  // every matrix: the equilibrium density is tiny exactly where the mask
  // acts, so eta/Delta explodes and the smallness hypotheses fail.
  for (std::size_t f = 0; f < c.closed.size(); ++f) {
    c.mask_dir[f].setZero();
    c.mask_dir[f](0) = 1.0;
    for (int i = 0; i < d; ++i) c.closed[f](0, i) *= column_mass;
  }
  return c;
}

MatrixCocycleEngine::MatrixCocycleEngine(const MatrixCocycle& c, int depth)
    : c_(c), depth_(depth) {}

const Eigen::VectorXd& MatrixCocycleEngine::nu0(std::int64_t k) {
  auto it = nus_.find(k);
  if (it != nus_.end()) return it->second;
  std::int64_t d = std::min<std::int64_t>(depth_, c_.N - k);
  if (d < 1) throw std::out_of_range("no room to the right for the adjoint sweep");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(c_.d);
  for (std::int64_t j = k + d - 1; j >= k; --j)
    w = normalized_sum(c_.closed_at(j).transpose() * w);
  return nus_.emplace(k, std::move(w)).first->second;
}

const LeadingTriple& MatrixCocycleEngine::triple(std::int64_t k, double eps) {
  auto key = std::make_pair(k, eps);
  auto it = triples_.find(key);
  if (it != triples_.end()) return it->second;

  std::int64_t d = std::min<std::int64_t>(depth_, k + c_.K);
  if (d < 1) throw std::out_of_range("no room to the left for the density sweep");
  auto pull = [&](std::int64_t at) {
    Eigen::VectorXd f = Eigen::VectorXd::Ones(c_.d);
    for (std::int64_t j = at - d; j < at; ++j)
      f = normalized_sum(c_.open_at(j, eps) * f);
    return f;
  };
  LeadingTriple t;
  t.nu = nu0(k);
  t.phi = pull(k);
  t.phi /= t.nu.dot(t.phi);
  Eigen::VectorXd pushed = c_.open_at(k, eps) * t.phi;
  t.lambda = nu0(k + 1).dot(pushed);

  Eigen::VectorXd phi_next = pull(k + 1);
  phi_next /= nu0(k + 1).dot(phi_next);
  t.equivariance_residual = (pushed - t.lambda * phi_next).cwiseAbs().maxCoeff();

  // Spectral-projection residuals for the closed decomposition
  // lambda^{-1} L f = nu(f) phi_next + Q(f).
  if (eps == 0.0) {
    t.q_phi_residual = t.equivariance_residual / t.lambda;
    Stream st(0xabcdef, static_cast<std::uint64_t>(k));
    double worst = 0.0;
    for (int p = 0; p < 10; ++p) {
      Eigen::VectorXd f(c_.d);
      for (int i = 0; i < c_.d; ++i) f(i) = st.uniform() - 0.5;
      double lhs = nu0(k + 1).dot(c_.closed_at(k) * f) / t.lambda;
      worst = std::max(worst, std::abs(lhs - t.nu.dot(f)));
    }
    t.q_nu_residual = worst;
  }
  return triples_.emplace(key, std::move(t)).first->second;
}

double MatrixCocycleEngine::delta(std::int64_t k, double eps) {
  const LeadingTriple& t0 = triple(k, 0.0);
  Eigen::VectorXd cut = eps * c_.dir_at(k).cwiseProduct(t0.phi);
  return nu0(k + 1).dot(c_.closed_at(k) * cut);
}

double MatrixCocycleEngine::eta(std::int64_t k, double eps) {
  Eigen::VectorXd coeff =
      eps * (c_.closed_at(k).transpose() * nu0(k + 1)).cwiseProduct(c_.dir_at(k));
  return coeff.cwiseAbs().sum();
}

double MatrixCocycleEngine::qk(std::int64_t k, double eps, int kk) {
  double den = delta(k, eps);
  if (den <= 0.0) throw std::domain_error("q undefined on a degenerate fiber");
  std::int64_t base = k - kk - 1;
  const LeadingTriple& t0 = triple(base, 0.0);
  Eigen::VectorXd f =
      c_.closed_at(base) * (eps * c_.dir_at(base).cwiseProduct(t0.phi));
  for (std::int64_t j = base + 1; j < k; ++j) f = c_.open_at(j, eps) * f;
  double num = nu0(k + 1).dot(c_.closed_at(k) * (eps * c_.dir_at(k).cwiseProduct(f)));
  return num / den;
}

double MatrixCocycleEngine::qk_limit(std::int64_t k, int kk) {
  std::vector<double> ys;
  for (double e : c_.eps_ladder) ys.push_back(qk(k, e, kk));
  return extrapolate_to_zero(c_.eps_ladder, ys);
}

double MatrixCocycleEngine::theta(std::int64_t k, int k_max) {
  double sum = 0.0;
  for (int kk = 0; kk < k_max; ++kk) {
    double prod = 1.0;
    for (int j = 1; j <= kk + 1; ++j) prod *= triple(k - j, 0.0).lambda;
    sum += qk_limit(k, kk) / prod;
  }
  return 1.0 - sum;
}

PerturbationLedger MatrixCocycleEngine::ledger(std::int64_t k, int k_max) {
  PerturbationLedger led;
  led.fiber = k;
  led.k_max = k_max;
  led.lambda0 = triple(k, 0.0).lambda;
  led.degenerate = c_.degenerate_at(k);
  for (double e : c_.eps_ladder) {
    PerturbationRow row;
    row.eps = e;
    row.lambda_eps = triple(k, e).lambda;
    row.delta = delta(k, e);
    row.eta = eta(k, e);
    if (!led.degenerate) {
      row.ratio = (led.lambda0 - row.lambda_eps) / row.delta;
      double partial = 0.0;
      for (int kk = 0; kk < k_max; ++kk) {
        row.q.push_back(qk(k, e, kk));
        double prod = 1.0;
        for (int j = 1; j <= kk + 1; ++j) prod *= triple(k - j, 0.0).lambda;
        partial += row.q.back() / prod;
        row.qhat_sum.push_back(partial);
      }
    }
    led.rows.push_back(std::move(row));
  }
  if (!led.degenerate) {
    led.theta = theta(k, k_max);
    std::vector<double> ratios;
    for (const auto& r : led.rows) ratios.push_back(r.ratio);
    led.ratio_extrapolated = extrapolate_to_zero(c_.eps_ladder, ratios);
    // Convergence order from the two largest rungs.
    if (led.rows.size() >= 2) {
      double e0 = led.rows[0].eps, e1 = led.rows[1].eps;
      double d0 = std::abs(led.rows[0].ratio - led.theta);
      double d1 = std::abs(led.rows[1].ratio - led.theta);
      if (d0 > 0.0 && d1 > 0.0)
        led.fitted_order = std::log(d0 / d1) / std::log(e0 / e1);
    }
  }
  return led;
}

}  // namespace ros
