#pragma once

#include <cstdint>

#include "easmh/subspace.hpp"
#include "easmh/targets.hpp"

namespace easmh {

/// Gaussian random-walk proposal; one scale per dimension or a shared scalar.
struct ProposalSpec {
  Vec scales{1.0};

  double scale_for(std::size_t i) const {
    return scales.size() == 1 ? scales[0] : scales.at(i);
  }
  void validate(std::size_t dim) const;
};

/// Proposal over the inactive coordinates z, strictly positive on all of
/// R^{m-n} and evaluable in log-space.
struct InactiveProposal {
  enum class Kind { StandardGaussian, ScaledGaussian };
  Kind kind = Kind::StandardGaussian;
  double scale = 1.0;  // used by ScaledGaussian

  double sigma() const { return kind == Kind::StandardGaussian ? 1.0 : scale; }
  double log_density(const Vec& z) const;
  Vec sample(std::size_t dim, Rng& rng) const;
};

/// Importance-sampling estimate of the marginal rho(y): d = (1/M) sum_j w_j
/// with w_j = rho(B_a y + B_i z_j) / q_z(z_j), kept in log space.
struct MarginalEstimate {
  double log_d = neg_inf;  // log_sum_exp(log_weights) - log M
  std::vector<Vec> z_draws;
  Vec log_weights;
};

/// Nested evaluations may run on EASMH_THREADS threads; draws and the weight
/// reduction stay in index order, so the result is thread-count independent.
MarginalEstimate estimate_marginal(const DensityModel& target,
                                   const ActiveSubspace& subspace, const Vec& y,
                                   const InactiveProposal& qz, std::size_t n_nested,
                                   Rng& rng);

/// One Metropolis-Hastings coin flip. log_den = -inf with finite log_num
/// forces acceptance; both -inf rejects. Always consumes exactly one uniform.
bool mh_accept(double log_num, double log_den, double log_q_forward,
               double log_q_backward, Rng& rng);

struct ChainOutput {
  std::size_t ambient_dim = 0;
  std::size_t active_dim = 0;  // equals ambient_dim for vanilla MH
  std::vector<Vec> y_samples;
  std::vector<char> accepted;
  Vec state_log_d;   // recycled estimate of the retained state (vanilla: log target)
  Vec accept_log_d;  // denominator estimate used in the accept step (MCwM: fresh)
  std::vector<MarginalEstimate> estimates;  // per iteration; empty when not stored
  long long evaluation_count = 0;
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;

  double acceptance_rate() const;
};

ChainOutput run_vanilla_mh(const DensityModel& target, const ProposalSpec& proposal,
                           const Vec& x0, std::size_t n_samples, std::size_t burn_in,
                           std::uint64_t seed);

struct AsmhOptions {
  std::size_t n_samples = 500;  // N, chain iterations
  std::size_t n_nested = 10;    // M, nested importance samples
  bool original_version = false;  // true: MCwM (biased); false: GIMH (exact)
  std::size_t burn_in = 0;
  bool store_pseudo_samples = true;
};

/// Active subspace Metropolis-Hastings, pseudo-marginal on y = B_a^T x.
ChainOutput run_asmh(const DensityModel& target, const ActiveSubspace& subspace,
                     const ProposalSpec& proposal_y, const InactiveProposal& qz,
                     const Vec& x0, const AsmhOptions& options, std::uint64_t seed);

struct WeightedSample {
  std::size_t iter = 0;  // chain iteration, 1-based
  std::size_t j = 0;     // nested index, 1-based
  double weight = 0.0;   // self-normalized within the iteration
  Vec x;
};

/// Full-space pseudo-samples x_{i,j} = B_a y_i + B_i z_{i,j}. Weights are
/// w_{i,j} / sum_j w_{i,j} per iteration; with unweighted=true every sample
/// gets 1/M instead (the algorithm's literal return value).
std::vector<WeightedSample> reconstruct_x_samples(
    const ActiveSubspace& subspace, const std::vector<Vec>& y_samples,
    const std::vector<MarginalEstimate>& estimates, std::size_t burn_in = 0,
    bool unweighted = false);

}  // namespace easmh
