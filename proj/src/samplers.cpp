#include "easmh/samplers.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

namespace easmh {

namespace {

constexpr double log_two_pi = 1.8378770664093453;

std::size_t nested_thread_count() {
  const char* env = std::getenv("EASMH_THREADS");
  if (!env) return 1;
  long v = std::atol(env);
  return v > 1 ? std::size_t(v) : 1;
}

double propose_and_log_q(const ProposalSpec& proposal, const Vec& from, Vec& to,
                         Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  to.resize(from.size());
  for (std::size_t i = 0; i < from.size(); ++i)
    to[i] = from[i] + proposal.scale_for(i) * normal(rng);
  return 0.0;  // random walk is symmetric; forward/backward densities cancel
}

}  // namespace

void ProposalSpec::validate(std::size_t dim) const {
  if (scales.size() != 1 && scales.size() != dim)
    throw Error("ProposalSpec: need 1 or " + std::to_string(dim) + " scales");
  for (double s : scales)
    if (!(s > 0.0)) throw Error("ProposalSpec: scales must be positive");
}

double InactiveProposal::log_density(const Vec& z) const {
  const double s = sigma();
  double q = 0.0;
  for (double v : z) q += v * v;
  return -0.5 * (double(z.size()) * (log_two_pi + 2.0 * std::log(s)) + q / (s * s));
}

Vec InactiveProposal::sample(std::size_t dim, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, sigma());
  Vec z(dim);
  for (double& v : z) v = normal(rng);
  return z;
}

MarginalEstimate estimate_marginal(const DensityModel& target,
                                   const ActiveSubspace& subspace, const Vec& y,
                                   const InactiveProposal& qz, std::size_t n_nested,
                                   Rng& rng) {
  if (n_nested < 1) throw Error("estimate_marginal: M must be >= 1");
  if (subspace.ambient_dim != target.dim)
    throw Error("estimate_marginal: subspace/target dimension mismatch");
  const std::size_t z_dim = subspace.ambient_dim - subspace.active_dim;

  MarginalEstimate est;
  est.z_draws.reserve(n_nested);
  for (std::size_t j = 0; j < n_nested; ++j) est.z_draws.push_back(qz.sample(z_dim, rng));
  est.log_weights.assign(n_nested, neg_inf);

  auto evaluate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      Vec x = subspace.reconstruct(y, est.z_draws[j]);
      est.log_weights[j] = target.log_density(x) - qz.log_density(est.z_draws[j]);
    }
  };

  std::size_t n_threads = std::min(nested_thread_count(), n_nested);
  if (n_threads <= 1) {
    evaluate(0, n_nested);
  } else {
    std::vector<std::thread> workers;
    std::size_t chunk = (n_nested + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      std::size_t begin = t * chunk;
      std::size_t end = std::min(begin + chunk, n_nested);
      if (begin >= end) break;
      workers.emplace_back(evaluate, begin, end);
    }
    for (auto& w : workers) w.join();
  }

  // reduce in index order so the result is independent of the thread split
  est.log_d = log_sum_exp(est.log_weights) - std::log(double(n_nested));
  return est;
}

bool mh_accept(double log_num, double log_den, double log_q_forward,
               double log_q_backward, Rng& rng) {
  if (std::isnan(log_num) || std::isnan(log_den) || std::isnan(log_q_forward) ||
      std::isnan(log_q_backward))
    throw Error("mh_accept: NaN input");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);  // always consume one uniform to keep streams aligned
  bool num_dead = log_num == neg_inf;
  bool den_dead = log_den == neg_inf;
  if (den_dead) return !num_dead;
  if (num_dead) return false;
  double log_ratio = log_num + log_q_backward - log_den - log_q_forward;
  return log_ratio >= 0.0 || std::log(u) < log_ratio;
}

double ChainOutput::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  double s = 0.0;
  for (char f : accepted) s += f ? 1.0 : 0.0;
  return s / double(accepted.size());
}

ChainOutput run_vanilla_mh(const DensityModel& target, const ProposalSpec& proposal,
                           const Vec& x0, std::size_t n_samples, std::size_t burn_in,
                           std::uint64_t seed) {
  if (n_samples < 1) throw Error("run_vanilla_mh: need n_samples >= 1");
  if (burn_in >= n_samples) throw Error("run_vanilla_mh: burn_in must be < n_samples");
  if (x0.size() != target.dim) throw Error("run_vanilla_mh: x0 dimension mismatch");
  proposal.validate(target.dim);

  ChainOutput out;
  out.ambient_dim = out.active_dim = target.dim;
  out.seed = seed;
  out.burn_in = burn_in;
  out.y_samples.reserve(n_samples);
  out.accepted.reserve(n_samples);
  out.state_log_d.reserve(n_samples);

  Rng rng = make_stream(seed, "vanilla-chain");
  Vec x = x0;
  double log_p = target.log_density(x);
  out.evaluation_count = 1;
  if (log_p == neg_inf)
    throw Error("run_vanilla_mh: target density is zero at the initial state");

  out.y_samples.push_back(x);
  out.accepted.push_back(1);
  out.state_log_d.push_back(log_p);
  out.accept_log_d.push_back(log_p);

  Vec x_prop;
  for (std::size_t i = 1; i < n_samples; ++i) {
    propose_and_log_q(proposal, x, x_prop, rng);
    double log_p_prop = target.log_density(x_prop);
    ++out.evaluation_count;
    bool accept = mh_accept(log_p_prop, log_p, 0.0, 0.0, rng);
    if (accept) {
      x = x_prop;
      log_p = log_p_prop;
    }
    out.y_samples.push_back(x);
    out.accepted.push_back(accept ? 1 : 0);
    out.state_log_d.push_back(log_p);
    out.accept_log_d.push_back(log_p);
  }
  return out;
}

ChainOutput run_asmh(const DensityModel& target, const ActiveSubspace& subspace,
                     const ProposalSpec& proposal_y, const InactiveProposal& qz,
                     const Vec& x0, const AsmhOptions& options, std::uint64_t seed) {
  if (options.n_samples < 1) throw Error("run_asmh: need n_samples >= 1");
  if (options.n_nested < 1) throw Error("run_asmh: need n_nested >= 1");
  if (options.burn_in >= options.n_samples)
    throw Error("run_asmh: burn_in must be < n_samples");
  if (subspace.ambient_dim != target.dim)
    throw Error("run_asmh: subspace/target dimension mismatch");
  if (x0.size() != target.dim) throw Error("run_asmh: x0 dimension mismatch");
  proposal_y.validate(subspace.active_dim);

  const std::size_t n = options.n_samples;
  const std::size_t m_nested = options.n_nested;

  ChainOutput out;
  out.ambient_dim = target.dim;
  out.active_dim = subspace.active_dim;
  out.seed = seed;
  out.burn_in = options.burn_in;
  out.y_samples.reserve(n);
  out.accepted.reserve(n);
  if (options.store_pseudo_samples) out.estimates.reserve(n);

  Rng chain_rng = make_stream(seed, "asmh-chain");

  // z draws per iteration come from counter-derived substreams so nested
  // parallelism and thread count cannot perturb the chain's randomness
  auto nested_estimate = [&](const Vec& y, const char* label, std::size_t iter) {
    Rng sub = make_stream(seed, label, iter);
    MarginalEstimate est = estimate_marginal(target, subspace, y, qz, m_nested, sub);
    out.evaluation_count += static_cast<long long>(m_nested);
    return est;
  };

  Vec y = subspace.to_active(x0);
  MarginalEstimate current = nested_estimate(y, "asmh-nested-proposal", 0);

  Vec y_prop;
  for (std::size_t i = 1; i <= n; ++i) {
    propose_and_log_q(proposal_y, y, y_prop, chain_rng);
    MarginalEstimate proposed = nested_estimate(y_prop, "asmh-nested-proposal", i);

    double log_den = current.log_d;
    if (options.original_version) {
      // MCwM: fresh estimate of the current state for this accept step only;
      // the stored draws (the pseudo-sample output) follow the accept branch
      MarginalEstimate refreshed = nested_estimate(y, "asmh-nested-current", i);
      log_den = refreshed.log_d;
    }

    bool accept = mh_accept(proposed.log_d, log_den, 0.0, 0.0, chain_rng);
    if (accept) {
      y = y_prop;
      current = std::move(proposed);
    }
    out.y_samples.push_back(y);
    out.accepted.push_back(accept ? 1 : 0);
    out.state_log_d.push_back(current.log_d);
    out.accept_log_d.push_back(log_den);
    if (options.store_pseudo_samples) out.estimates.push_back(current);
  }
  return out;
}

std::vector<WeightedSample> reconstruct_x_samples(
    const ActiveSubspace& subspace, const std::vector<Vec>& y_samples,
    const std::vector<MarginalEstimate>& estimates, std::size_t burn_in,
    bool unweighted) {
  if (estimates.size() != y_samples.size())
    throw Error("reconstruct_x_samples: estimates not aligned with y_samples");

  std::vector<WeightedSample> out;
  for (std::size_t i = burn_in; i < y_samples.size(); ++i) {
    const MarginalEstimate& est = estimates[i];
    const std::size_t m_nested = est.z_draws.size();
    Vec weights(m_nested, 1.0 / double(m_nested));
    if (!unweighted) {
      double lse = log_sum_exp(est.log_weights);
      if (std::isfinite(lse))
        for (std::size_t j = 0; j < m_nested; ++j)
          weights[j] = std::exp(est.log_weights[j] - lse);
      // all -inf: keep uniform weights (degenerate pre-stationarity state)
    }
    for (std::size_t j = 0; j < m_nested; ++j) {
      WeightedSample s;
      s.iter = i + 1;
      s.j = j + 1;
      s.weight = weights[j];
      s.x = subspace.reconstruct(y_samples[i], est.z_draws[j]);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace easmh
