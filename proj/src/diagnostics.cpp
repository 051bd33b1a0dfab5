#include "easmh/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace easmh {

namespace {

constexpr double two_pi = 6.283185307179586;

struct DimStats {
  Vec mean;
  Vec var;                       // biased (1/N)
  std::vector<std::size_t> live;  // dimensions with positive variance
};

DimStats chain_stats(const std::vector<Vec>& chain) {
  if (chain.empty()) throw Error("diagnostics: empty chain");
  const std::size_t n = chain.size();
  const std::size_t d = chain[0].size();
  DimStats st;
  st.mean.assign(d, 0.0);
  st.var.assign(d, 0.0);
  for (const Vec& x : chain)
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += x[j] / double(n);
  for (const Vec& x : chain)
    for (std::size_t j = 0; j < d; ++j) {
      double c = x[j] - st.mean[j];
      st.var[j] += c * c / double(n);
    }
  for (std::size_t j = 0; j < d; ++j) {
    // a constant dimension can acquire a tiny variance through rounding of
    // the mean; detect constancy exactly instead
    bool constant = true;
    for (const Vec& x : chain)
      if (x[j] != chain[0][j]) {
        constant = false;
        break;
      }
    if (constant) st.var[j] = 0.0;
    if (st.var[j] > 0.0)
      st.live.push_back(j);
    else
      std::cerr << "warning: chain dimension " << (j + 1)
                << " has zero variance, excluded from autocorrelation\n";
  }
  if (st.live.empty())
    throw Error("diagnostics: chain is constant in every dimension");
  return st;
}

double autocov(const std::vector<Vec>& chain, const DimStats& st, std::size_t dim,
               std::size_t lag) {
  const std::size_t n = chain.size();
  double s = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t)
    s += (chain[t][dim] - st.mean[dim]) * (chain[t + lag][dim] - st.mean[dim]);
  return s / double(n);
}

}  // namespace

AutocorrelationCurve autocorrelation(const std::vector<Vec>& chain,
                                     std::size_t max_lag) {
  if (max_lag < 1) throw Error("autocorrelation: max_lag must be >= 1");
  if (chain.size() <= max_lag)
    throw Error("autocorrelation: chain length must exceed max_lag");
  DimStats st = chain_stats(chain);

  AutocorrelationCurve curve;
  curve.values.assign(max_lag + 1, -1.0);
  curve.values[0] = 1.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double mx = -1.0;
    for (std::size_t j : st.live)
      mx = std::max(mx, autocov(chain, st, j, lag) / st.var[j]);
    curve.values[lag] = mx;
  }
  return curve;
}

Vec effective_sample_size(const std::vector<Vec>& chain) {
  DimStats st = chain_stats(chain);
  const std::size_t n = chain.size();
  const std::size_t d = chain[0].size();
  const std::size_t cap = std::min(n - 1, std::size_t(10000));

  Vec ess(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    if (st.var[j] <= 0.0) {
      ess[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double s = 0.0;
    for (std::size_t k = 1; k + 1 <= cap; k += 2) {
      double pair = autocov(chain, st, j, k) / st.var[j] +
                    autocov(chain, st, j, k + 1) / st.var[j];
      s += pair;
      if (pair < 0.0) break;
    }
    ess[j] = double(n) / (1.0 + 2.0 * s);
  }
  return ess;
}

std::vector<Vec> thin_chain(const std::vector<Vec>& chain, std::size_t every) {
  if (every < 1) throw Error("thin_chain: thinning factor must be >= 1");
  std::vector<Vec> out;
  for (std::size_t i = every - 1; i < chain.size(); i += every) out.push_back(chain[i]);
  return out;
}

KdeResult gaussian_kde(const std::vector<Vec>& points, const Vec& weights,
                       const GridSpec& grid, const Vec& bandwidth) {
  const std::size_t d = grid.dim();
  if (d < 1 || d > 2) throw Error("gaussian_kde: grid dimension must be 1 or 2");
  if (grid.hi.size() != d || grid.counts.size() != d)
    throw Error("gaussian_kde: inconsistent grid spec");
  if (points.empty()) throw Error("gaussian_kde: no samples");
  if (weights.size() != points.size())
    throw Error("gaussian_kde: weights/points length mismatch");

  double wsum = 0.0, wsq = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("gaussian_kde: weights must be nonnegative");
    wsum += w;
    wsq += w * w;
  }
  if (wsum <= 0.0) throw Error("gaussian_kde: total weight is zero");

  KdeResult res;
  res.grid = grid;
  res.bandwidth = bandwidth;
  if (res.bandwidth.empty()) {
    // Scott's rule with effective sample size for weighted input
    double n_eff = wsum * wsum / wsq;
    res.bandwidth.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0, var = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i)
        mean += weights[i] / wsum * points[i][j];
      for (std::size_t i = 0; i < points.size(); ++i) {
        double c = points[i][j] - mean;
        var += weights[i] / wsum * c * c;
      }
      double sigma = std::sqrt(var);
      if (sigma <= 0.0) sigma = 1.0;
      res.bandwidth[j] = sigma * std::pow(n_eff, -1.0 / (double(d) + 4.0));
    }
  }
  if (res.bandwidth.size() != d) throw Error("gaussian_kde: bandwidth dimension mismatch");
  for (double h : res.bandwidth)
    if (!(h > 0.0)) throw Error("gaussian_kde: bandwidths must be positive");

  auto grid_coord = [&](std::size_t j, std::size_t idx) {
    if (grid.counts[j] == 1) return grid.lo[j];
    return grid.lo[j] + (grid.hi[j] - grid.lo[j]) * double(idx) /
                            double(grid.counts[j] - 1);
  };

  double kernel_norm = 1.0;
  for (std::size_t j = 0; j < d; ++j)
    kernel_norm /= std::sqrt(two_pi) * res.bandwidth[j];

  std::size_t total = 1;
  for (std::size_t c : grid.counts) total *= c;
  res.density.assign(total, 0.0);

  Vec point_coord(d);
  for (std::size_t cell = 0; cell < total; ++cell) {
    std::size_t rest = cell;
    for (std::size_t j = d; j-- > 0;) {
      point_coord[j] = grid_coord(j, rest % grid.counts[j]);
      rest /= grid.counts[j];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (weights[i] == 0.0) continue;
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double u = (point_coord[j] - points[i][j]) / res.bandwidth[j];
        q += u * u;
      }
      acc += weights[i] * std::exp(-0.5 * q);
    }
    res.density[cell] = kernel_norm * acc / wsum;
  }
  return res;
}

Vec mode_occupancy(const std::vector<Vec>& points, const Vec& weights,
                   const std::vector<Vec>& centers) {
  if (centers.empty()) throw Error("mode_occupancy: need at least one center");
  if (weights.size() != points.size())
    throw Error("mode_occupancy: weights/points length mismatch");
  Vec fractions(centers.size(), 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      double q = 0.0;
      for (std::size_t j = 0; j < points[i].size(); ++j) {
        double u = points[i][j] - centers[c][j];
        q += u * u;
      }
      if (q < best) {
        best = q;
        best_c = c;
      }
    }
    fractions[best_c] += weights[i];
    wsum += weights[i];
  }
  if (wsum <= 0.0) throw Error("mode_occupancy: total weight is zero");
  for (double& f : fractions) f /= wsum;
  return fractions;
}

}  // namespace easmh
