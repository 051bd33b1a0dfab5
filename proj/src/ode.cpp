#include "easmh/ode.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "easmh/rng.hpp"

namespace easmh {

namespace {

constexpr double divergence_bound = 1e8;

bool state_ok(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v) || std::fabs(v) > divergence_bound) return false;
  return true;
}

void format_double(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

Vec lorenz96_rhs(const Lorenz96Params& params, const Vec& state) {
  const std::size_t k_dim = params.state_dim;
  if (k_dim < 4) throw Error("lorenz96_rhs: state_dim must be >= 4");
  if (state.size() != params.total_dim())
    throw Error("lorenz96_rhs: state dimension mismatch (expected " +
                std::to_string(params.total_dim()) + ", got " +
                std::to_string(state.size()) + ")");

  Vec deriv(state.size(), 0.0);
  auto xs = [&](std::ptrdiff_t k) {  // slow variable, cyclic
    return state[std::size_t(((k % std::ptrdiff_t(k_dim)) + k_dim) % k_dim)];
  };
  for (std::size_t k = 0; k < k_dim; ++k) {
    std::ptrdiff_t ks = std::ptrdiff_t(k);
    deriv[k] = -xs(ks - 1) * (xs(ks - 2) - xs(ks + 1)) - xs(ks) + params.forcing;
  }

  if (params.two_scale) {
    const auto& ts = *params.two_scale;
    if (ts.fast_per_slow < 1) throw Error("lorenz96_rhs: fast_per_slow must be >= 1");
    if (ts.time_scale == 0.0 || ts.amplitude == 0.0)
      throw Error("lorenz96_rhs: two-scale constants c, b must be nonzero");
    const std::size_t j_dim = k_dim * ts.fast_per_slow;
    const double hc_b = ts.coupling * ts.time_scale / ts.amplitude;
    auto ys = [&](std::ptrdiff_t j) {  // fast variable, cyclic over K*J
      return state[k_dim +
                   std::size_t(((j % std::ptrdiff_t(j_dim)) + j_dim) % j_dim)];
    };
    for (std::size_t k = 0; k < k_dim; ++k) {
      double coupling_sum = 0.0;
      for (std::size_t j = k * ts.fast_per_slow; j < (k + 1) * ts.fast_per_slow; ++j)
        coupling_sum += state[k_dim + j];
      deriv[k] -= hc_b * coupling_sum;
    }
    for (std::size_t j = 0; j < j_dim; ++j) {
      std::ptrdiff_t js = std::ptrdiff_t(j);
      std::size_t slow = j / ts.fast_per_slow;  // [(j-1)/J]+1 in 1-based indexing
      deriv[k_dim + j] = -ts.time_scale * ts.amplitude * ys(js + 1) *
                             (ys(js + 2) - ys(js - 1)) -
                         ts.time_scale * ys(js) + hc_b * state[slow];
    }
  }
  return deriv;
}

Trajectory integrate(const Lorenz96Params& params, const Vec& initial, double t0,
                     double t1, double step) {
  if (!(step > 0.0)) throw Error("integrate: step must be positive");
  if (!(t1 > t0)) throw Error("integrate: t1 must exceed t0");
  if (initial.size() != params.total_dim())
    throw Error("integrate: initial state dimension mismatch");

  const double span = t1 - t0;
  std::size_t n_full = std::size_t(std::floor(span / step + 1e-9));
  double remainder = span - double(n_full) * step;
  bool partial = remainder > 1e-12 * std::max(1.0, std::fabs(t1));

  Trajectory traj;
  traj.times.reserve(n_full + 2);
  traj.states.reserve(n_full + 2);
  traj.times.push_back(t0);
  traj.states.push_back(initial);

  Vec x = initial;
  if (!state_ok(x)) {
    traj.diverged = true;
    return traj;
  }

  const std::size_t dim = x.size();
  Vec k1, k2, k3, k4, tmp(dim);
  auto rk4_step = [&](double h) {
    k1 = lorenz96_rhs(params, x);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    k2 = lorenz96_rhs(params, tmp);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    k3 = lorenz96_rhs(params, tmp);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * k3[i];
    k4 = lorenz96_rhs(params, tmp);
    for (std::size_t i = 0; i < dim; ++i)
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  };

  std::size_t total_steps = n_full + (partial ? 1 : 0);
  for (std::size_t s = 1; s <= total_steps; ++s) {
    double t_next = (s <= n_full) ? t0 + double(s) * step : t1;
    double h = (s <= n_full) ? step : remainder;
    rk4_step(h);
    if (!state_ok(x)) {
      traj.diverged = true;
      return traj;
    }
    traj.times.push_back(t_next);
    traj.states.push_back(x);
  }
  return traj;
}

ObservationRecord generate_lorenz96_data(const Lorenz96Params& params,
                                         const Vec& truth_initial, double t0, double t1,
                                         double step, double noise_variance,
                                         std::uint64_t seed, std::size_t obs_stride) {
  if (noise_variance < 0.0)
    throw Error("generate_lorenz96_data: noise_variance must be >= 0");
  if (obs_stride < 1) throw Error("generate_lorenz96_data: obs_stride must be >= 1");
  Trajectory traj = integrate(params, truth_initial, t0, t1, step);
  if (traj.diverged)
    throw Error("generate_lorenz96_data: ground-truth trajectory diverged");

  Rng rng = make_stream(seed, "lorenz96-observation-noise");
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));

  ObservationRecord data;
  data.n_components = params.total_dim();
  for (std::size_t t = 1; t < traj.times.size(); ++t) {
    if ((t - 1) % obs_stride != 0) continue;
    Vec obs = traj.states[t];
    if (noise_variance > 0.0)
      for (double& v : obs) v += noise(rng);
    data.times.push_back(traj.times[t]);
    data.values.push_back(std::move(obs));
  }
  return data;
}

void save_observations_csv(const ObservationRecord& data,
                           const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("save_observations_csv: cannot open " + file.string());
  out << "time,component,value\n";
  for (std::size_t t = 0; t < data.times.size(); ++t)
    for (std::size_t c = 0; c < data.values[t].size(); ++c) {
      format_double(out, data.times[t]);
      out << "," << (c + 1) << ",";
      format_double(out, data.values[t][c]);
      out << "\n";
    }
  if (!out) throw Error("save_observations_csv: write failed");
}

ObservationRecord load_observations_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("load_observations_csv: cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != "time,component,value")
    throw Error("load_observations_csv: bad header in " + file.string());

  ObservationRecord data;
  double prev_time = neg_inf;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f1, f2, f3;
    if (!std::getline(row, f1, ',') || !std::getline(row, f2, ',') ||
        !std::getline(row, f3))
      throw Error("load_observations_csv: malformed row: " + line);
    double time = std::stod(f1);
    std::size_t component = std::stoul(f2);
    double value = std::stod(f3);
    if (time != prev_time) {
      if (time < prev_time)
        throw Error("load_observations_csv: rows not sorted by time");
      data.times.push_back(time);
      data.values.emplace_back();
      prev_time = time;
    }
    if (component != data.values.back().size() + 1)
      throw Error("load_observations_csv: components out of order at time " + f1);
    data.values.back().push_back(value);
  }
  if (data.values.empty()) throw Error("load_observations_csv: no observations");
  data.n_components = data.values.front().size();
  for (const Vec& v : data.values)
    if (v.size() != data.n_components)
      throw Error("load_observations_csv: inconsistent component counts");
  return data;
}

void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("save_trajectory_csv: cannot open " + file.string());
  out << "time";
  std::size_t dim = traj.states.empty() ? 0 : traj.states.front().size();
  for (std::size_t i = 1; i <= dim; ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t t = 0; t < traj.times.size(); ++t) {
    format_double(out, traj.times[t]);
    for (double v : traj.states[t]) {
      out << ",";
      format_double(out, v);
    }
    out << "\n";
  }
  if (!out) throw Error("save_trajectory_csv: write failed");
}

}  // namespace easmh
