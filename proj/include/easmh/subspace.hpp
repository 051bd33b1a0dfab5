#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "easmh/linalg.hpp"
#include "easmh/rng.hpp"

namespace easmh {

enum class SubspaceMethod { GradientCovariance, PosteriorCovariance, LinearRegression };

std::string method_name(SubspaceMethod m);
SubspaceMethod method_from_name(const std::string& name);

/// Orthonormal split of R^m into active (B_a, n columns) and inactive
/// (B_i, m-n columns) directions. Coordinates: y = B_a^T x, z = B_i^T x,
/// x = B_a y + B_i z.
struct ActiveSubspace {
  std::size_t ambient_dim = 0;
  std::size_t active_dim = 0;
  Matrix basis_active;    // m x n
  Matrix basis_inactive;  // m x (m-n)
  Vec eigenvalues;        // descending; empty for the regression method
  SubspaceMethod method = SubspaceMethod::GradientCovariance;

  Vec to_active(const Vec& x) const { return matvec_transposed(basis_active, x); }
  Vec to_inactive(const Vec& x) const { return matvec_transposed(basis_inactive, x); }
  Vec reconstruct(const Vec& y, const Vec& z) const;
};

struct SpectralGap {
  std::size_t cut_index = 0;  // number of eigenvalues kept
  double gap_ratio = 1.0;
};

/// Pick the cut maximizing the consecutive ratio lambda_k / max(lambda_{k+1}, eps)
/// with eps = 1e-12 * lambda_1; ties break toward smaller k.
SpectralGap detect_spectral_gap(const Vec& eigenvalues,
                                std::optional<std::size_t> max_active_dim = {});

using LogDensityFn = std::function<double(const Vec&)>;
using GradientFn = std::function<Vec(const Vec&)>;
using SamplerFn = std::function<Vec(Rng&)>;

/// Expected outer product of the log-likelihood gradient over prior draws.
ActiveSubspace construct_gradient_covariance(const GradientFn& loglik_gradient,
                                             const SamplerFn& prior_sampler,
                                             std::size_t ambient_dim, std::size_t n_draws,
                                             Rng& rng,
                                             std::optional<std::size_t> active_dim = {});

/// Importance-sampled posterior covariance: weights rho(X)/rho_p(X) over prior draws.
ActiveSubspace construct_posterior_covariance(const LogDensityFn& log_target,
                                              const SamplerFn& prior_sampler,
                                              const LogDensityFn& log_prior,
                                              std::size_t ambient_dim, std::size_t n_draws,
                                              Rng& rng,
                                              std::optional<std::size_t> active_dim = {});

/// One-dimensional subspace from a linear fit of a scalar field on the points.
ActiveSubspace construct_linear_regression(const LogDensityFn& scalar_field,
                                           const std::vector<Vec>& points);

void save_subspace(const ActiveSubspace& ss, const std::filesystem::path& file);
ActiveSubspace load_subspace(const std::filesystem::path& file);

}  // namespace easmh
