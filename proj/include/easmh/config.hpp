#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "easmh/subspace.hpp"
#include "easmh/targets.hpp"

namespace easmh {

enum class ExperimentKind { Mixture2d, Mixture10d, Lorenz96, Custom };
enum class SamplerMode { Vanilla, AsmhOriginal, Easmh };

std::string experiment_name(ExperimentKind e);
std::string mode_name(SamplerMode m);

/// One fully resolved experiment description (config file keys + defaults).
struct RunConfig {
  ExperimentKind experiment = ExperimentKind::Mixture2d;
  SamplerMode mode = SamplerMode::Easmh;

  std::size_t n_samples = 500;   // sampler.N
  std::size_t n_nested = 10;     // sampler.M
  std::size_t burn_in = 0;       // sampler.burn_in
  Vec proposal_scale{1.0};       // sampler.proposal_scale
  double qz_scale = 1.0;         // sampler.qz_scale

  SubspaceMethod subspace_method = SubspaceMethod::LinearRegression;
  std::size_t subspace_n = 500;               // subspace.N
  std::optional<std::size_t> active_dim;      // subspace.active_dim
  std::string subspace_file;                  // subspace.file (load instead of build)
  double construction_prior_variance = 10.0;  // subspace.prior_variance

  std::uint64_t seed = 1;
  std::string output_dir = "easmh_out";

  Lorenz96ExperimentConfig lorenz;
  double lorenz_forcing = 8.0;

  std::size_t custom_dim = 2;
  Vec custom_variances;  // empty: unit variances
};

/// Parse the documented key-value config format. Strict: unknown keys are
/// errors; all validation errors are collected into one Error message.
RunConfig parse_config(const std::string& text);

}  // namespace easmh
