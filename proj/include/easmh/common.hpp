#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace easmh {

using Vec = std::vector<double>;

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// Error type thrown by all modules for contract violations.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// log(sum(exp(v))) with max-shifting; returns -inf for empty or all -inf input.
inline double log_sum_exp(const Vec& v) {
  double mx = neg_inf;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return neg_inf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace easmh
