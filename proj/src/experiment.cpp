#include "easmh/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "easmh/diagnostics.hpp"

namespace easmh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double log_two_pi = 1.8378770664093453;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Isotropic centered Gaussian used to draw subspace-construction points.
struct IsotropicPrior {
  std::size_t dim;
  double variance;

  Vec sample(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, std::sqrt(variance));
    Vec x(dim);
    for (double& v : x) v = normal(rng);
    return x;
  }
  double log_density(const Vec& x) const {
    return -0.5 * (double(dim) * (log_two_pi + std::log(variance)) +
                   dot(x, x) / variance);
  }
};

std::vector<Vec> full_space_chain(const RunConfig& cfg, const ExperimentResult& res,
                                  std::vector<WeightedSample>* weighted_out) {
  const ChainOutput& chain = res.chain;
  if (cfg.mode == SamplerMode::Vanilla) {
    std::vector<Vec> xs(chain.y_samples.begin() + std::ptrdiff_t(chain.burn_in),
                        chain.y_samples.end());
    if (weighted_out) {
      weighted_out->clear();
      for (std::size_t i = chain.burn_in; i < chain.y_samples.size(); ++i)
        weighted_out->push_back({i + 1, 1, 1.0, chain.y_samples[i]});
    }
    return xs;
  }
  auto samples = reconstruct_x_samples(*res.subspace, chain.y_samples, chain.estimates,
                                       chain.burn_in);
  if (weighted_out) *weighted_out = samples;
  // one full-space sample per iteration (the last nested draw) for
  // autocorrelation: lag then counts MH steps
  std::vector<Vec> xs;
  for (std::size_t i = cfg.n_nested - 1; i < samples.size(); i += cfg.n_nested)
    xs.push_back(samples[i].x);
  return xs;
}

}  // namespace

DensityModel build_target(const RunConfig& cfg, const fs::path& data_csv,
                          std::shared_ptr<std::atomic<long long>> divergences) {
  switch (cfg.experiment) {
    case ExperimentKind::Mixture2d:
      return make_mixture_experiment_target(MixtureVariant::TwoD);
    case ExperimentKind::Mixture10d:
      return make_mixture_experiment_target(MixtureVariant::TenD);
    case ExperimentKind::Custom: {
      Matrix cov = Matrix::identity(cfg.custom_dim);
      for (std::size_t i = 0; i < cfg.custom_dim; ++i)
        cov(i, i) = cfg.custom_variances.empty() ? 1.0 : cfg.custom_variances[i];
      return make_gaussian_target(GaussianSpec(Vec(cfg.custom_dim, 0.0), cov));
    }
    case ExperimentKind::Lorenz96: {
      Lorenz96Params params;
      params.state_dim = cfg.lorenz.state_dim;
      params.forcing = cfg.lorenz_forcing;
      Rng truth_rng = make_stream(cfg.seed, "lorenz96-truth");
      std::normal_distribution<double> normal(0.0, 1.0);
      Vec truth(params.state_dim);
      for (double& v : truth) v = normal(truth_rng);
      ObservationRecord data = generate_lorenz96_data(
          params, truth, cfg.lorenz.t0, cfg.lorenz.t1, cfg.lorenz.step,
          cfg.lorenz.noise_variance, derive_seed(cfg.seed, "lorenz96-data"),
          cfg.lorenz.obs_stride);
      if (!data_csv.empty()) save_observations_csv(data, data_csv);
      return make_lorenz96_posterior(cfg.lorenz, std::move(data), divergences);
    }
  }
  throw Error("build_target: unknown experiment");
}

ActiveSubspace build_subspace(const RunConfig& cfg, const DensityModel& target,
                              long long* evaluations) {
  Rng rng = make_stream(cfg.seed, "subspace-construction");
  long long evals = 0;
  ActiveSubspace ss;

  // lorenz96 uses its own Gaussian prior for the construction draws; the
  // synthetic experiments use the isotropic variance-10 sampler
  SamplerFn sampler;
  LogDensityFn log_prior;
  if (cfg.experiment == ExperimentKind::Lorenz96 && target.log_prior) {
    sampler = target.exact_sampler;
    log_prior = target.log_prior;
  } else {
    IsotropicPrior prior{target.dim, cfg.construction_prior_variance};
    sampler = [prior](Rng& r) { return prior.sample(r); };
    log_prior = [prior](const Vec& x) { return prior.log_density(x); };
  }

  switch (cfg.subspace_method) {
    case SubspaceMethod::LinearRegression: {
      std::vector<Vec> points;
      points.reserve(cfg.subspace_n);
      for (std::size_t i = 0; i < cfg.subspace_n; ++i) points.push_back(sampler(rng));
      auto field = [&](const Vec& x) {
        ++evals;
        return std::exp(target.log_density(x));
      };
      ss = construct_linear_regression(field, points);
      break;
    }
    case SubspaceMethod::PosteriorCovariance: {
      auto counted = [&](const Vec& x) {
        ++evals;
        return target.log_density(x);
      };
      ss = construct_posterior_covariance(counted, sampler, log_prior, target.dim,
                                          cfg.subspace_n, rng, cfg.active_dim);
      break;
    }
    case SubspaceMethod::GradientCovariance: {
      if (!target.loglik_gradient)
        throw Error("build_subspace: gradient_covariance requires a target with a "
                    "log-likelihood gradient");
      auto counted = [&](const Vec& x) {
        ++evals;
        return target.loglik_gradient(x);
      };
      ss = construct_gradient_covariance(counted, sampler, target.dim, cfg.subspace_n,
                                         rng, cfg.active_dim);
      break;
    }
  }
  if (evaluations) *evaluations = evals;
  return ss;
}

ExperimentResult run_pipeline(const RunConfig& cfg, const fs::path& data_csv) {
  auto t_start = std::chrono::steady_clock::now();
  ExperimentResult res;
  auto divergences = std::make_shared<std::atomic<long long>>(0);
  DensityModel target = build_target(cfg, data_csv, divergences);

  Vec x0(target.dim, 0.0);
  ProposalSpec proposal{cfg.proposal_scale};

  if (cfg.mode == SamplerMode::Vanilla) {
    res.chain = run_vanilla_mh(target, proposal, x0, cfg.n_samples, cfg.burn_in,
                               derive_seed(cfg.seed, "sampler"));
  } else {
    if (!cfg.subspace_file.empty())
      res.subspace = load_subspace(cfg.subspace_file);
    else
      res.subspace = build_subspace(cfg, target, &res.construction_evaluations);
    if (res.subspace->ambient_dim != target.dim)
      throw Error("run_pipeline: loaded subspace dimension does not match target");

    InactiveProposal qz;
    if (cfg.qz_scale != 1.0)
      qz = {InactiveProposal::Kind::ScaledGaussian, cfg.qz_scale};

    AsmhOptions options;
    options.n_samples = cfg.n_samples;
    options.n_nested = cfg.n_nested;
    options.original_version = cfg.mode == SamplerMode::AsmhOriginal;
    options.burn_in = cfg.burn_in;
    res.chain = run_asmh(target, *res.subspace, proposal, qz, x0, options,
                         derive_seed(cfg.seed, "sampler"));
  }

  res.divergence_count = divergences->load();
  res.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

void save_y_samples_csv(const ChainOutput& chain, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("save_y_samples_csv: cannot open " + file.string());
  out << "iter,accepted";
  for (std::size_t j = 1; j <= chain.active_dim; ++j) out << ",y" << j;
  out << ",log_d\n";
  for (std::size_t i = 0; i < chain.y_samples.size(); ++i) {
    out << (i + 1) << "," << int(chain.accepted[i]);
    for (double v : chain.y_samples[i]) out << "," << fmt(v);
    out << "," << fmt(chain.state_log_d[i]) << "\n";
  }
  if (!out) throw Error("save_y_samples_csv: write failed");
}

void save_x_samples_csv(const std::vector<WeightedSample>& samples, std::size_t dim,
                        const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("save_x_samples_csv: cannot open " + file.string());
  out << "iter,j";
  out << ",weight";
  for (std::size_t j = 1; j <= dim; ++j) out << ",x" << j;
  out << "\n";
  for (const auto& s : samples) {
    out << s.iter << "," << s.j << "," << fmt(s.weight);
    for (double v : s.x) out << "," << fmt(v);
    out << "\n";
  }
  if (!out) throw Error("save_x_samples_csv: write failed");
}

namespace {

void save_autocorrelation_csv(const AutocorrelationCurve& curve, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open " + file.string());
  out << "lag,value\n";
  for (std::size_t lag = 0; lag < curve.values.size(); ++lag)
    out << lag << "," << fmt(curve.values[lag]) << "\n";
}

void save_kde_csv(const KdeResult& kde, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open " + file.string());
  const auto& g = kde.grid;
  auto coord = [&](std::size_t j, std::size_t idx) {
    if (g.counts[j] == 1) return g.lo[j];
    return g.lo[j] + (g.hi[j] - g.lo[j]) * double(idx) / double(g.counts[j] - 1);
  };
  if (g.dim() == 1) {
    out << "x,density\n";
    for (std::size_t i = 0; i < g.counts[0]; ++i)
      out << fmt(coord(0, i)) << "," << fmt(kde.density[i]) << "\n";
  } else {
    out << "x,y,density\n";
    for (std::size_t i = 0; i < g.counts[0]; ++i)
      for (std::size_t j = 0; j < g.counts[1]; ++j)
        out << fmt(coord(0, i)) << "," << fmt(coord(1, j)) << ","
            << fmt(kde.density[i * g.counts[1] + j]) << "\n";
  }
}

void save_occupancy_csv(const Vec& fractions, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open " + file.string());
  out << "mode,fraction\n";
  for (std::size_t i = 0; i < fractions.size(); ++i)
    out << (i + 1) << "," << fmt(fractions[i]) << "\n";
}

json config_echo(const RunConfig& cfg) {
  json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["sampler.mode"] = mode_name(cfg.mode);
  j["sampler.N"] = cfg.n_samples;
  j["sampler.M"] = cfg.n_nested;
  j["sampler.burn_in"] = cfg.burn_in;
  j["sampler.proposal_scale"] = cfg.proposal_scale;
  j["sampler.qz_scale"] = cfg.qz_scale;
  j["subspace.method"] = method_name(cfg.subspace_method);
  j["subspace.N"] = cfg.subspace_n;
  if (cfg.active_dim) j["subspace.active_dim"] = *cfg.active_dim;
  if (!cfg.subspace_file.empty()) j["subspace.file"] = cfg.subspace_file;
  j["subspace.prior_variance"] = cfg.construction_prior_variance;
  if (cfg.experiment == ExperimentKind::Lorenz96) {
    j["lorenz96.dim"] = cfg.lorenz.state_dim;
    j["lorenz96.F"] = cfg.lorenz_forcing;
    j["lorenz96.t0"] = cfg.lorenz.t0;
    j["lorenz96.t1"] = cfg.lorenz.t1;
    j["lorenz96.step"] = cfg.lorenz.step;
    j["lorenz96.noise_variance"] = cfg.lorenz.noise_variance;
  }
  if (cfg.experiment == ExperimentKind::Custom) {
    j["custom.dim"] = cfg.custom_dim;
    if (!cfg.custom_variances.empty()) j["custom.variances"] = cfg.custom_variances;
  }
  return j;
}

std::vector<Vec> mixture_mode_centers(const RunConfig& cfg) {
  if (cfg.experiment == ExperimentKind::Mixture2d)
    return {{2.0, 2.0}, {-2.0, -2.0}};
  Vec c1(10, 0.0), c2(10, 0.0);
  c1[0] = 2.0;
  c2[0] = -2.0;
  return {c1, c2};
}

}  // namespace

int run_experiment(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  try {
    fs::create_directories(dir);
    fs::remove(dir / "FAILED");

    fs::path data_csv =
        cfg.experiment == ExperimentKind::Lorenz96 ? dir / "data.csv" : fs::path{};
    ExperimentResult res = run_pipeline(cfg, data_csv);
    const ChainOutput& chain = res.chain;

    if (res.subspace) save_subspace(*res.subspace, dir / "subspace.txt");
    save_y_samples_csv(chain, dir / "y_samples.csv");

    std::vector<WeightedSample> weighted;
    std::vector<Vec> xs = full_space_chain(cfg, res, &weighted);
    save_x_samples_csv(weighted, chain.ambient_dim, dir / "x_samples.csv");

    std::size_t max_lag = std::min<std::size_t>(50, xs.size() > 2 ? xs.size() / 2 : 1);
    AutocorrelationCurve curve = autocorrelation(xs, max_lag);
    save_autocorrelation_csv(curve, dir / "autocorrelation.csv");

    Vec x_weights;
    std::vector<Vec> x_points;
    for (const auto& s : weighted) {
      x_weights.push_back(s.weight);
      x_points.push_back(s.x);
    }

    json summary;
    summary["experiment"] = experiment_name(cfg.experiment);
    summary["mode"] = mode_name(cfg.mode);
    summary["seed"] = cfg.seed;
    summary["acceptance_rate"] = chain.acceptance_rate();
    summary["sampler_evaluations"] = chain.evaluation_count;
    summary["construction_evaluations"] = res.construction_evaluations;
    summary["total_evaluations"] =
        chain.evaluation_count + res.construction_evaluations;
    summary["wall_time_seconds"] = res.wall_time_seconds;
    summary["config"] = config_echo(cfg);

    Vec ess = effective_sample_size(xs);
    summary["ess"] = ess;

    if (res.subspace) {
      json ss;
      ss["method"] = method_name(res.subspace->method);
      ss["active_dim"] = res.subspace->active_dim;
      if (!res.subspace->eigenvalues.empty()) {
        ss["eigenvalues"] = res.subspace->eigenvalues;
        Vec floored = res.subspace->eigenvalues;
        for (double& v : floored) v = std::max(v, 0.0);
        SpectralGap gap = detect_spectral_gap(floored);
        ss["spectral_gap"] = {{"cut_index", gap.cut_index},
                              {"gap_ratio", gap.gap_ratio}};
      }
      summary["subspace"] = ss;
    }
    if (cfg.experiment == ExperimentKind::Lorenz96)
      summary["ode_divergences"] = res.divergence_count;

    if (cfg.experiment == ExperimentKind::Mixture2d ||
        cfg.experiment == ExperimentKind::Mixture10d) {
      Vec occ = mode_occupancy(x_points, x_weights, mixture_mode_centers(cfg));
      save_occupancy_csv(occ, dir / "occupancy.csv");
      summary["mode_occupancy"] = occ;
    }

    if (cfg.experiment == ExperimentKind::Mixture2d) {
      // proposal-matched bandwidth: the KDE approximates the target convolved
      // with the random-walk kernel
      GridSpec grid{{-6.0, -6.0}, {6.0, 6.0}, {81, 81}};
      KdeResult kde = gaussian_kde(x_points, x_weights, grid, {1.0, 1.0});
      save_kde_csv(kde, dir / "kde.csv");
    } else if (cfg.experiment == ExperimentKind::Lorenz96) {
      // joint marginal of the forcing constant and the last state component
      std::vector<Vec> fx;
      fx.reserve(x_points.size());
      for (const auto& x : x_points)
        fx.push_back({x[cfg.lorenz.state_dim], x[cfg.lorenz.state_dim - 1]});
      double flo = fx[0][0], fhi = fx[0][0], xlo = fx[0][1], xhi = fx[0][1];
      for (const auto& p : fx) {
        flo = std::min(flo, p[0]);
        fhi = std::max(fhi, p[0]);
        xlo = std::min(xlo, p[1]);
        xhi = std::max(xhi, p[1]);
      }
      GridSpec grid{{flo - 0.5, xlo - 0.5}, {fhi + 0.5, xhi + 0.5}, {61, 61}};
      KdeResult kde = gaussian_kde(fx, x_weights, grid);
      save_kde_csv(kde, dir / "kde.csv");
    } else {
      // first-coordinate marginal
      std::vector<Vec> first;
      first.reserve(x_points.size());
      for (const auto& x : x_points) first.push_back({x[0]});
      GridSpec grid{{-6.0}, {6.0}, {121}};
      KdeResult kde = gaussian_kde(first, x_weights, grid);
      save_kde_csv(kde, dir / "kde.csv");
    }

    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << "\n";
    if (!out) throw Error("run_experiment: cannot write summary.json");
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::ofstream marker(dir / "FAILED");
    marker << e.what() << "\n";
    return 2;
  }
}

void compare_runs(const std::vector<std::string>& run_dirs, std::size_t max_lag,
                  const std::string& out_dir) {
  if (run_dirs.size() < 2) throw Error("compare_runs: need at least 2 run directories");

  struct RunInfo {
    std::string name;
    json summary;
    Vec autocorr;
    Vec occupancy;  // may be empty
  };
  std::vector<RunInfo> runs;
  for (const auto& d : run_dirs) {
    RunInfo info;
    info.name = fs::path(d).filename().string();
    if (info.name.empty()) info.name = d;
    std::ifstream sum(fs::path(d) / "summary.json");
    if (!sum) throw Error("compare_runs: missing summary.json in " + d);
    sum >> info.summary;
    std::ifstream ac(fs::path(d) / "autocorrelation.csv");
    if (!ac) throw Error("compare_runs: missing autocorrelation.csv in " + d);
    std::string line;
    std::getline(ac, line);
    while (std::getline(ac, line)) {
      auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      info.autocorr.push_back(std::stod(line.substr(comma + 1)));
    }
    std::ifstream occ(fs::path(d) / "occupancy.csv");
    if (occ) {
      std::getline(occ, line);
      while (std::getline(occ, line)) {
        auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        info.occupancy.push_back(std::stod(line.substr(comma + 1)));
      }
    }
    runs.push_back(std::move(info));
  }

  for (const auto& r : runs) {
    if (r.summary["experiment"] != runs[0].summary["experiment"])
      throw Error("compare_runs: runs target different experiments");
    if (r.autocorr.size() <= max_lag)
      throw Error("compare_runs: run '" + r.name + "' has fewer than " +
                  std::to_string(max_lag) + " autocorrelation lags");
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "acceptance.csv");
    out << "run,mode,acceptance_rate,total_evaluations\n";
    for (const auto& r : runs)
      out << r.name << "," << r.summary["mode"].get<std::string>() << ","
          << fmt(r.summary["acceptance_rate"].get<double>()) << ","
          << r.summary["total_evaluations"].get<long long>() << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "autocorrelation.csv");
    out << "lag";
    for (const auto& r : runs) out << "," << r.name;
    out << "\n";
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      out << lag;
      for (const auto& r : runs) out << "," << fmt(r.autocorr[lag]);
      out << "\n";
    }
  }
  bool all_occ = true;
  for (const auto& r : runs) all_occ = all_occ && !r.occupancy.empty();
  if (all_occ) {
    std::ofstream out(fs::path(out_dir) / "occupancy.csv");
    out << "mode";
    for (const auto& r : runs) out << "," << r.name;
    out << "\n";
    for (std::size_t m = 0; m < runs[0].occupancy.size(); ++m) {
      out << (m + 1);
      for (const auto& r : runs)
        out << "," << (m < r.occupancy.size() ? fmt(r.occupancy[m]) : "");
      out << "\n";
    }
  }
}

}  // namespace easmh
