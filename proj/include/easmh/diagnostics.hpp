#pragma once

#include "easmh/common.hpp"

namespace easmh {

struct AutocorrelationCurve {
  Vec values;  // index = lag; values[0] == 1
};

/// Per-dimension sample autocorrelation with biased (1/N) normalization over
/// the complete chain, reduced across dimensions by the maximum at each lag.
/// Zero-variance dimensions are excluded (all-constant chains are an error).
AutocorrelationCurve autocorrelation(const std::vector<Vec>& chain,
                                     std::size_t max_lag);

/// N / (1 + 2 sum rho_k) per dimension; the sum stops after the first lag
/// pair with rho_k + rho_{k+1} < 0 (that pair is still included).
Vec effective_sample_size(const std::vector<Vec>& chain);

/// Keep every k-th sample, starting with the (k-1)-th (the last of each block).
std::vector<Vec> thin_chain(const std::vector<Vec>& chain, std::size_t every);

struct GridSpec {
  Vec lo, hi;                      // per dimension, d <= 2
  std::vector<std::size_t> counts; // grid points per dimension
  std::size_t dim() const { return lo.size(); }
};

struct KdeResult {
  GridSpec grid;
  Vec bandwidth;
  Vec density;  // row-major over the grid (first dimension slowest)
};

/// Self-normalized weighted Gaussian KDE on a regular grid. An empty
/// bandwidth selects Scott's rule per dimension with n_eff = (sum w)^2 / sum w^2.
KdeResult gaussian_kde(const std::vector<Vec>& points, const Vec& weights,
                       const GridSpec& grid, const Vec& bandwidth = {});

/// Weight fraction assigned to the nearest center, per center; sums to 1.
Vec mode_occupancy(const std::vector<Vec>& points, const Vec& weights,
                   const std::vector<Vec>& centers);

}  // namespace easmh
