#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "easmh/common.hpp"

namespace easmh {

/// Lorenz-96, single-scale by default. With the two-scale block enabled the
/// state is (X_1..X_K, Y_1..Y_{K*J}); all indices wrap cyclically.
struct Lorenz96Params {
  std::size_t state_dim = 36;  // K, number of slow variables
  double forcing = 8.0;        // F

  struct TwoScale {
    std::size_t fast_per_slow = 10;  // J
    double coupling = 1.0;           // h
    double time_scale = 10.0;        // c
    double amplitude = 10.0;         // b
  };
  std::optional<TwoScale> two_scale;

  std::size_t total_dim() const {
    return state_dim + (two_scale ? state_dim * two_scale->fast_per_slow : 0);
  }
};

Vec lorenz96_rhs(const Lorenz96Params& params, const Vec& state);

struct Trajectory {
  Vec times;                // strictly increasing, starts at t0
  std::vector<Vec> states;  // one state per time
  bool diverged = false;
};

/// Classical fixed-step RK4; the final partial step is shortened to land on
/// t1 exactly. A non-finite or |X| > 1e8 state marks the trajectory diverged
/// and stops the integration.
Trajectory integrate(const Lorenz96Params& params, const Vec& initial, double t0,
                     double t1, double step);

/// Noisy observations of a forward solve: every obs_stride-th saved state
/// after t0, each component perturbed by N(0, noise_variance).
struct ObservationRecord {
  std::size_t n_components = 0;
  Vec times;
  std::vector<Vec> values;  // per time, one value per component
};

ObservationRecord generate_lorenz96_data(const Lorenz96Params& params,
                                         const Vec& truth_initial, double t0, double t1,
                                         double step, double noise_variance,
                                         std::uint64_t seed, std::size_t obs_stride = 1);

// CSV schema: header `time,component,value`, rows sorted by time then component.
void save_observations_csv(const ObservationRecord& data,
                           const std::filesystem::path& file);
ObservationRecord load_observations_csv(const std::filesystem::path& file);

// CSV schema: header `time,x1,...,xK`.
void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& file);

}  // namespace easmh
