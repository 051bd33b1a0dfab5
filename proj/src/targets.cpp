#include "easmh/targets.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace easmh {

namespace {
constexpr double log_two_pi = 1.8378770664093453;  // log(2*pi)
}

GaussianSpec::GaussianSpec(Vec mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw Error("GaussianSpec: covariance shape does not match mean");
  try {
    chol_ = cholesky(covariance_);
  } catch (const Error& e) {
    throw Error(std::string("GaussianSpec: covariance is not positive definite (") +
                e.what() + ")");
  }
  double log_det = 0.0;
  for (std::size_t i = 0; i < chol_.rows(); ++i) log_det += 2.0 * std::log(chol_(i, i));
  log_norm_const_ = -0.5 * (double(mean_.size()) * log_two_pi + log_det);
}

double GaussianSpec::log_density(const Vec& x) const {
  if (x.size() != mean_.size()) throw Error("GaussianSpec: point dimension mismatch");
  Vec d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - mean_[i];
  Vec u = solve_lower_triangular(chol_, std::move(d));
  return log_norm_const_ - 0.5 * dot(u, u);
}

Vec GaussianSpec::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec xi(mean_.size());
  for (double& v : xi) v = normal(rng);
  Vec x = mean_;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) x[i] += chol_(i, j) * xi[j];
  return x;
}

double gaussian_log_density(const GaussianSpec& spec, const Vec& x) {
  return spec.log_density(x);
}

double mixture_log_density(const std::vector<MixtureComponent>& components,
                           const Vec& x) {
  if (components.empty()) throw Error("mixture_log_density: empty component list");
  double wsum = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw Error("mixture_log_density: weights must be positive");
    wsum += c.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw Error("mixture_log_density: weights must sum to 1");
  Vec terms;
  terms.reserve(components.size());
  for (const auto& c : components)
    terms.push_back(std::log(c.weight) + c.spec.log_density(x));
  return log_sum_exp(terms);
}

DensityModel make_gaussian_target(GaussianSpec spec) {
  auto shared = std::make_shared<GaussianSpec>(std::move(spec));
  DensityModel model;
  model.dim = shared->dim();
  model.log_density = [shared](const Vec& x) { return shared->log_density(x); };
  model.exact_sampler = [shared](Rng& rng) { return shared->sample(rng); };
  return model;
}

DensityModel make_mixture_target(std::vector<MixtureComponent> components) {
  if (components.empty()) throw Error("make_mixture_target: empty component list");
  auto shared =
      std::make_shared<std::vector<MixtureComponent>>(std::move(components));
  DensityModel model;
  model.dim = shared->front().spec.dim();
  model.log_density = [shared](const Vec& x) { return mixture_log_density(*shared, x); };
  model.exact_sampler = [shared](Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    double acc = 0.0;
    for (const auto& c : *shared) {
      acc += c.weight;
      if (u <= acc) return c.spec.sample(rng);
    }
    return shared->back().spec.sample(rng);
  };
  return model;
}

DensityModel make_mixture_experiment_target(MixtureVariant variant) {
  if (variant == MixtureVariant::TwoD) {
    Matrix cov(2, 2);
    cov(0, 0) = cov(1, 1) = 1.0;
    cov(0, 1) = cov(1, 0) = -0.9;
    std::vector<MixtureComponent> comps;
    comps.push_back({0.5, GaussianSpec({2.0, 2.0}, cov)});
    comps.push_back({0.5, GaussianSpec({-2.0, -2.0}, cov)});
    return make_mixture_target(std::move(comps));
  }
  const std::size_t dim = 10;
  Vec mu1(dim, 0.0), mu2(dim, 0.0);
  mu1[0] = 2.0;
  mu2[0] = -2.0;
  std::vector<MixtureComponent> comps;
  comps.push_back({0.5, GaussianSpec(mu1, Matrix::identity(dim))});
  comps.push_back({0.5, GaussianSpec(mu2, Matrix::identity(dim))});
  return make_mixture_target(std::move(comps));
}

DensityModel make_lorenz96_posterior(
    const Lorenz96ExperimentConfig& config, ObservationRecord data,
    std::shared_ptr<std::atomic<long long>> divergence_counter) {
  const std::size_t k_dim = config.state_dim;
  if (data.n_components != k_dim)
    throw Error("make_lorenz96_posterior: observation components (" +
                std::to_string(data.n_components) + ") do not match state_dim (" +
                std::to_string(k_dim) + ")");

  // map each observation time onto the integration grid once, up front
  auto obs_index = std::make_shared<std::vector<std::size_t>>();
  for (double t : data.times) {
    double pos = (t - config.t0) / config.step;
    auto idx = std::size_t(std::llround(pos));
    if (std::fabs(pos - double(idx)) > 1e-6)
      throw Error("make_lorenz96_posterior: observation time " + std::to_string(t) +
                  " is not on the integration grid");
    obs_index->push_back(idx);
  }

  auto shared_data = std::make_shared<ObservationRecord>(std::move(data));
  const double prior_var = config.prior_variance;
  const double obs_var = config.noise_variance;
  const std::size_t m = k_dim + 1;
  const Lorenz96ExperimentConfig cfg = config;

  DensityModel model;
  model.dim = m;
  model.log_prior = [m, prior_var](const Vec& x) {
    if (x.size() != m) throw Error("lorenz96 posterior: point dimension mismatch");
    double q = dot(x, x);
    return -0.5 * (double(m) * (log_two_pi + std::log(prior_var)) + q / prior_var);
  };
  model.log_likelihood = [cfg, shared_data, obs_index, obs_var, divergence_counter,
                          k_dim, m](const Vec& x) {
    if (x.size() != m) throw Error("lorenz96 posterior: point dimension mismatch");
    Lorenz96Params params;
    params.state_dim = k_dim;
    params.forcing = x[k_dim];
    Vec initial(x.begin(), x.begin() + std::ptrdiff_t(k_dim));
    Trajectory traj = integrate(params, initial, cfg.t0, cfg.t1, cfg.step);
    if (traj.diverged) {
      if (divergence_counter) divergence_counter->fetch_add(1);
      return neg_inf;
    }
    double n_obs = 0.0, ssq = 0.0;
    for (std::size_t t = 0; t < shared_data->times.size(); ++t) {
      const Vec& state = traj.states[(*obs_index)[t]];
      const Vec& obs = shared_data->values[t];
      for (std::size_t c = 0; c < k_dim; ++c) {
        double r = obs[c] - state[c];
        ssq += r * r;
      }
      n_obs += double(k_dim);
    }
    return -0.5 * (n_obs * (log_two_pi + std::log(obs_var)) + ssq / obs_var);
  };
  auto lp = model.log_prior;
  auto ll = model.log_likelihood;
  model.log_density = [lp, ll](const Vec& x) {
    double prior = lp(x);
    double lik = ll(x);
    if (!std::isfinite(prior) || !std::isfinite(lik)) return neg_inf;
    return prior + lik;
  };
  model.exact_sampler = [m, prior_var](Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(prior_var));
    Vec x(m);
    for (double& v : x) v = normal(rng);
    return x;
  };
  return model;
}

}  // namespace easmh
