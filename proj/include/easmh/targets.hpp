#pragma once

#include <atomic>
#include <functional>
#include <memory>

#include "easmh/linalg.hpp"
#include "easmh/ode.hpp"
#include "easmh/rng.hpp"

namespace easmh {

/// Multivariate Gaussian, validated (Cholesky) at construction.
class GaussianSpec {
public:
  GaussianSpec(Vec mean, Matrix covariance);

  double log_density(const Vec& x) const;
  Vec sample(Rng& rng) const;

  const Vec& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  std::size_t dim() const { return mean_.size(); }

private:
  Vec mean_;
  Matrix covariance_;
  Matrix chol_;           // lower factor
  double log_norm_const_; // -(m/2) log(2 pi) - (1/2) log det
};

double gaussian_log_density(const GaussianSpec& spec, const Vec& x);

struct MixtureComponent {
  double weight;
  GaussianSpec spec;
};

/// log of sum_i w_i N(x; spec_i), max-shifted so exponents down to -700 survive.
double mixture_log_density(const std::vector<MixtureComponent>& components, const Vec& x);

/// Evaluable unnormalized log-density, optionally decomposed as prior x likelihood.
/// Unset std::function members mean "not available".
struct DensityModel {
  std::size_t dim = 0;
  std::function<double(const Vec&)> log_density;
  std::function<double(const Vec&)> log_prior;
  std::function<double(const Vec&)> log_likelihood;
  std::function<Vec(const Vec&)> loglik_gradient;
  std::function<Vec(Rng&)> exact_sampler;
};

DensityModel make_gaussian_target(GaussianSpec spec);
DensityModel make_mixture_target(std::vector<MixtureComponent> components);

enum class MixtureVariant { TwoD, TenD };

/// The bimodal Gaussian-mixture experiment targets: TwoD with means +-(2,2) and
/// covariance [[1,-0.9],[-0.9,1]]; TenD with means +-2 e1 and identity covariances.
DensityModel make_mixture_experiment_target(MixtureVariant variant);

struct Lorenz96ExperimentConfig {
  std::size_t state_dim = 36;
  double t0 = 0.0;
  double t1 = 10.0;
  double step = 0.01;
  double noise_variance = 0.1;  // observation noise, also the likelihood variance
  double prior_variance = 4.0;
  std::size_t obs_stride = 1;
};

/// Posterior over x = (initial state, forcing F), dimension state_dim + 1.
/// Diverged forward solves yield log-density -inf and bump the counter.
DensityModel make_lorenz96_posterior(
    const Lorenz96ExperimentConfig& config, ObservationRecord data,
    std::shared_ptr<std::atomic<long long>> divergence_counter = nullptr);

}  // namespace easmh
