#include "ros/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ros {

double GridDensity::integral() const {
  double s = std::accumulate(values.begin(), values.end(), 0.0);
  return s / static_cast<double>(n);
}

double GridDensity::sup() const { return *std::max_element(values.begin(), values.end()); }
double GridDensity::inf() const { return *std::min_element(values.begin(), values.end()); }

double pairing(const std::vector<double>& w, const GridDensity& f) {
  if (w.size() != f.values.size()) throw std::invalid_argument("pairing size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f.values[i];
  return s / static_cast<double>(f.n);
}

std::vector<double> hole_mask(const IntervalSet& hole, std::size_t n) {
  std::vector<double> mask(n, 1.0);
  const double h = 1.0 / static_cast<double>(n);
  for (const auto& part : hole.parts()) {
    std::size_t j0 = static_cast<std::size_t>(std::floor(part.lo * n));
    std::size_t j1 = static_cast<std::size_t>(std::ceil(part.hi * n));
    j1 = std::min(j1, n);
    for (std::size_t j = j0; j < j1; ++j) {
      double lo = std::max(part.lo, j * h);
      double hi = std::min(part.hi, (j + 1) * h);
      if (hi > lo) mask[j] -= (hi - lo) * n;
    }
  }
  for (auto& v : mask) v = std::clamp(v, 0.0, 1.0);
  return mask;
}

GridDensity TransferMatrix::apply(const GridDensity& f) const {
  if (f.n != n()) throw std::invalid_argument("grid size mismatch");
  GridDensity out{f.n, std::vector<double>(f.n), f.nonnegative};
  csr_matvec(m, f.values.data(), out.values.data());
  return out;
}

GridDensity TransferMatrix::apply_masked(const GridDensity& f,
                                         const std::vector<double>& mask) const {
  if (f.n != n() || mask.size() != n()) throw std::invalid_argument("grid size mismatch");
  std::vector<double> tmp(f.n);
  hadamard(f.n, f.values.data(), mask.data(), tmp.data());
  GridDensity out{f.n, std::vector<double>(f.n), f.nonnegative};
  csr_matvec(m, tmp.data(), out.values.data());
  return out;
}

std::vector<double> TransferMatrix::apply_transpose(const std::vector<double>& w) const {
  if (w.size() != n()) throw std::invalid_argument("grid size mismatch");
  std::vector<double> out(n(), 0.0);
  for (std::size_t i = 0; i < n(); ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    for (std::uint32_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
      out[m.col[k]] += m.val[k] * wi;
  }
  return out;
}

std::vector<double> TransferMatrix::apply_transpose_masked(
    const std::vector<double>& w, const std::vector<double>& mask) const {
  std::vector<double> out = apply_transpose(w);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= mask[j];
  return out;
}

TransferMatrix build_transfer_matrix(const PiecewiseAffineMap& map,
                                     const WeightFunction& weight, std::size_t n) {
  if (n < 2) throw std::invalid_argument("grid needs at least two cells");
  const double h = 1.0 / static_cast<double>(n);
  // Accumulate rows as (col, value) lists.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  bool exact = true;
  auto aligned = [&](double x) {
    double r = x * n;
    return std::abs(r - std::round(r)) < 1e-9;
  };
  for (const auto& br : map.branches()) {
    if (!aligned(br.a) || !aligned(br.b)) exact = false;
    Interval im = br.image();
    if (!aligned(im.lo) || !aligned(im.hi)) exact = false;
    const double g = weight.branch_weight(br);
    const double coeff = n * std::abs(br.slope) * g;
    std::size_t i0 = static_cast<std::size_t>(std::floor(im.lo * n));
    std::size_t i1 = std::min(n, static_cast<std::size_t>(std::ceil(im.hi * n)));
    for (std::size_t i = i0; i < i1; ++i) {
      // Preimage of cell i under this branch, clipped to the branch domain
      // and the branch image.
      double ylo = std::max(im.lo, i * h);
      double yhi = std::min(im.hi, (i + 1) * h);
      if (yhi <= ylo) continue;
      double u = br.inverse(ylo), v = br.inverse(yhi);
      if (u > v) std::swap(u, v);
      u = std::max(u, br.a);
      v = std::min(v, br.b);
      if (v <= u) continue;
      std::size_t j0 = static_cast<std::size_t>(std::floor(u * n));
      std::size_t j1 = std::min(n, static_cast<std::size_t>(std::ceil(v * n)));
      for (std::size_t j = j0; j < j1; ++j) {
        double lo = std::max(u, j * h);
        double hi = std::min(v, (j + 1) * h);
        if (hi > lo) rows[i].push_back({static_cast<std::uint32_t>(j), coeff * (hi - lo)});
      }
    }
  }
  TransferMatrix out;
  out.exact = exact;
  out.m.n = n;
  out.m.row_ptr.resize(n + 1, 0);
  std::size_t nnz = 0;
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    // merge duplicate columns
    std::vector<std::pair<std::uint32_t, double>> merged;
    for (const auto& e : row) {
      if (!merged.empty() && merged.back().first == e.first) {
        merged.back().second += e.second;
      } else {
        merged.push_back(e);
      }
    }
    row = std::move(merged);
    nnz += row.size();
  }
  out.m.col.reserve(nnz);
  out.m.val.reserve(nnz);
  for (std::size_t i = 0; i < n; ++i) {
    out.m.row_ptr[i] = static_cast<std::uint32_t>(out.m.col.size());
    for (const auto& e : rows[i]) {
      out.m.col.push_back(e.first);
      out.m.val.push_back(e.second);
    }
  }
  out.m.row_ptr[n] = static_cast<std::uint32_t>(out.m.col.size());
  return out;
}

TransferMatrix open_operator(const TransferMatrix& closed,
                             const std::vector<double>& mask) {
  if (mask.size() != closed.n()) throw std::invalid_argument("mask size mismatch");
  TransferMatrix out = closed;
  for (std::size_t k = 0; k < out.m.val.size(); ++k) out.m.val[k] *= mask[out.m.col[k]];
  return out;
}

const TransferMatrix& TransferCache::matrix_for(const PiecewiseAffineMap& map,
                                                const WeightFunction& weight) {
  std::ostringstream key;
  key.precision(17);
  key << map.family() << '|' << map.param() << '|' << weight.r << '|' << n_;
  // Families with extra shape parameters (shifted circle maps) need the full
  // branch signature in the key.
  for (const auto& br : map.branches()) key << '|' << br.a << ',' << br.slope << ',' << br.intercept;
  auto it = cache_.find(key.str());
  if (it == cache_.end()) {
    auto m = std::make_unique<TransferMatrix>(build_transfer_matrix(map, weight, n_));
    it = cache_.emplace(key.str(), std::move(m)).first;
  }
  return *it->second;
}

GridDensity cocycle_apply(const FiberPath& path, int eps, std::int64_t k0, int steps,
                          GridDensity f, TransferCache& cache) {
  if (k0 < path.left() || k0 + steps > path.right() + 1)
    throw std::out_of_range("cocycle window overflow");
  for (int s = 0; s < steps; ++s) {
    const Fiber& fib = path.at(k0 + s);
    const TransferMatrix& M = cache.matrix_for(fib.par.map, fib.par.weight);
    if (eps >= 0 && static_cast<std::size_t>(eps) < fib.holes.size() &&
        !fib.holes[static_cast<std::size_t>(eps)].empty()) {
      f = M.apply_masked(f, hole_mask(fib.holes[static_cast<std::size_t>(eps)], f.n));
    } else {
      f = M.apply(f);
    }
  }
  return f;
}

LyDiagnostic lasota_yorke_diagnostic(const FiberPath& path, int eps, std::int64_t k0,
                                     int n_prime, TransferCache& cache) {
  LyDiagnostic d;
  double bound = 1.0;
  for (int s = 0; s < n_prime; ++s) {
    const Fiber& fib = path.at(k0 + s);
    double gmax = 0.0;
    for (const auto& br : fib.par.map.branches())
      gmax = std::max(gmax, fib.par.weight.branch_weight(br));
    bound *= gmax;
  }
  d.bound = 9.0 * bound;
  const std::size_t n = cache.grid_size();
  auto variation = [](const GridDensity& g) {
    double tv = 0.0;
    for (std::size_t i = 1; i < g.values.size(); ++i)
      tv += std::abs(g.values[i] - g.values[i - 1]);
    return tv;
  };
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    GridDensity e = GridDensity::constant(n, 0.0);
    e.values[j] = 1.0;
    double ve = variation(e);
    GridDensity out = cocycle_apply(path, eps, k0, n_prime, e, cache);
    worst = std::max(worst, variation(out) / ve);
  }
  d.empirical = worst;
  d.pass = d.empirical <= d.bound + 1e-9;
  return d;
}

std::size_t aligned_grid_size(const FiberPath& path, std::size_t cap) {
  // Collect small-denominator representations of all branch endpoints.
  std::size_t l = 1;
  for (std::int64_t k = path.left(); k <= path.right(); ++k) {
    for (const auto& br : path.at(k).par.map.branches()) {
      for (double x : {br.a, br.b}) {
        if (x <= 0.0 || x >= 1.0) continue;
        std::size_t q = 0;
        for (std::size_t cand = 1; cand <= 64; ++cand) {
          double p = std::round(x * cand);
          if (p >= 1.0 && std::abs(x - p / cand) < 1e-12) {
            q = cand;
            break;
          }
        }
        if (q == 0) return 0;
        l = std::lcm(l, q);
        if (l > cap) return 0;
      }
    }
  }
  // Inflate by an integer factor to use the budget.
  std::size_t best = l;
  while (best * 2 <= cap) best *= 2;
  return best;
}

}  // namespace ros
