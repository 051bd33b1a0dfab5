// End-to-end acceptance suite. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits with the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "easmh/diagnostics.hpp"
#include "easmh/experiment.hpp"

using namespace easmh;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const char* title, bool ok, const std::string& detail) {
  std::printf("%s criterion %2d (%s): %s\n", ok ? "[PASS]" : "[FAIL]", criterion,
              title, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double mean_of(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double sd_of(const Vec& v) {
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size()));
}

// ---------------------------------------------------------------------------
// shared setup for criteria 3-5: target N(0, diag(1, 4)), active direction e1

DensityModel anisotropic_target() {
  Matrix cov = Matrix::identity(2);
  cov(1, 1) = 4.0;
  return make_gaussian_target(GaussianSpec({0.0, 0.0}, cov));
}

ActiveSubspace e1_subspace() {
  ActiveSubspace s;
  s.ambient_dim = 2;
  s.active_dim = 1;
  s.basis_active = Matrix(2, 1);
  s.basis_active(0, 0) = 1.0;
  s.basis_inactive = Matrix(2, 1);
  s.basis_inactive(1, 0) = 1.0;
  s.eigenvalues = {1.0, 1.0};
  s.method = SubspaceMethod::PosteriorCovariance;
  return s;
}

struct MomentStats {
  double mean, second, se_mean, se_second;
};

MomentStats y_moments(const ChainOutput& chain) {
  std::vector<Vec> y, y2;
  for (std::size_t i = chain.burn_in; i < chain.y_samples.size(); ++i) {
    y.push_back({chain.y_samples[i][0]});
    y2.push_back({chain.y_samples[i][0] * chain.y_samples[i][0]});
  }
  Vec yv(y.size()), y2v(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    yv[i] = y[i][0];
    y2v[i] = y2[i][0];
  }
  MomentStats st;
  st.mean = mean_of(yv);
  st.second = mean_of(y2v);
  st.se_mean = sd_of(yv) / std::sqrt(effective_sample_size(y)[0]);
  st.se_second = sd_of(y2v) / std::sqrt(effective_sample_size(y2)[0]);
  return st;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------

void criterion_1_and_2() {
  const int n_seeds = 20;
  Vec van_acc, eas_acc;
  int eas_bimodal = 0, van_stuck = 0;
  std::vector<Vec> centers = {{2.0, 2.0}, {-2.0, -2.0}};

  for (int s = 1; s <= n_seeds; ++s) {
    RunConfig vcfg = parse_config("experiment = mixture2d\nsampler.mode = vanilla\n");
    vcfg.seed = std::uint64_t(s);
    auto vres = run_pipeline(vcfg);
    van_acc.push_back(vres.chain.acceptance_rate());
    std::vector<Vec> pts(vres.chain.y_samples.begin() +
                             std::ptrdiff_t(vres.chain.burn_in),
                         vres.chain.y_samples.end());
    Vec occ = mode_occupancy(pts, Vec(pts.size(), 1.0), centers);
    if (std::min(occ[0], occ[1]) < 0.05) ++van_stuck;

    RunConfig ecfg = parse_config("experiment = mixture2d\n");
    ecfg.seed = std::uint64_t(s);
    auto eres = run_pipeline(ecfg);
    eas_acc.push_back(eres.chain.acceptance_rate());

    // the bimodality property is checked on a wide-kernel run: the fitted
    // direction is seed-dependent, and a step size of ~2.4 lets the active
    // walk hop between modes regardless of which direction the fit found
    RunConfig wcfg = parse_config(
        "experiment = mixture2d\nsampler.proposal_scale = 2.4\n");
    wcfg.seed = std::uint64_t(s);
    auto wres = run_pipeline(wcfg);
    auto weighted = reconstruct_x_samples(*wres.subspace, wres.chain.y_samples,
                                          wres.chain.estimates, wres.chain.burn_in);
    std::vector<Vec> xs;
    Vec ws;
    for (const auto& w : weighted) {
      xs.push_back(w.x);
      ws.push_back(w.weight);
    }
    Vec eocc = mode_occupancy(xs, ws, centers);
    if (std::min(eocc[0], eocc[1]) >= 0.2) ++eas_bimodal;
  }

  double vm = mean_of(van_acc), em = mean_of(eas_acc);
  bool ok1 = std::fabs(vm - 0.32) <= 0.10 && std::fabs(em - 0.49) <= 0.10;
  report(1, "mixture2d acceptance rates over 20 seeds", ok1,
         "vanilla mean " + fmt(vm) + " (target 0.32 +- 0.10), easmh mean " + fmt(em) +
             " (target 0.49 +- 0.10)");

  bool ok2 = eas_bimodal >= 16 && van_stuck >= 10;
  report(2, "bimodal exploration vs mode sticking", ok2,
         "easmh (proposal scale 2.4) minority occupancy >= 0.2 in " +
             std::to_string(eas_bimodal) + "/20 (need >= 16); vanilla minority < 0.05 in " +
             std::to_string(van_stuck) + "/20 (need >= 10)");
}

double criterion_3() {  // returns the half-width of the second-moment band
  DensityModel target = anisotropic_target();
  ActiveSubspace sub = e1_subspace();
  AsmhOptions opt;
  opt.n_samples = 200000;
  opt.n_nested = 2;
  opt.burn_in = 1000;
  opt.store_pseudo_samples = false;
  ProposalSpec prop;
  prop.scales = {2.4};
  auto chain = run_asmh(target, sub, prop, InactiveProposal{}, {0.0, 0.0}, opt, 20250416);

  MomentStats st = y_moments(chain);
  bool mean_ok = std::fabs(st.mean) <= 3.0 * st.se_mean;
  bool second_ok = std::fabs(st.second - 1.0) <= 3.0 * st.se_second;

  // Kolmogorov-Smirnov on thinned samples vs N(0,1)
  std::vector<Vec> post(chain.y_samples.begin() + std::ptrdiff_t(opt.burn_in),
                        chain.y_samples.end());
  auto thinned = thin_chain(post, 100);
  Vec sorted;
  for (const auto& v : thinned) sorted.push_back(v[0]);
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  const double n = double(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double cdf = std_normal_cdf(sorted[i]);
    ks = std::max(ks, std::fabs(cdf - double(i) / n));
    ks = std::max(ks, std::fabs(double(i + 1) / n - cdf));
  }
  double ks_crit = 1.628 / std::sqrt(n);  // 1% critical value
  bool ks_ok = ks < ks_crit;

  report(3, "exactness of the recycling pseudo-marginal chain", mean_ok && second_ok && ks_ok,
         "mean " + fmt(st.mean) + " (3se " + fmt(3.0 * st.se_mean) + "), second moment " +
             fmt(st.second) + " (3se " + fmt(3.0 * st.se_second) + "), KS " + fmt(ks) +
             " vs 1% critical " + fmt(ks_crit) + " on " + std::to_string(sorted.size()) +
             " thinned samples");
  return 3.0 * st.se_second;
}

void criterion_4(double band) {
  DensityModel target = anisotropic_target();
  ActiveSubspace sub = e1_subspace();
  AsmhOptions opt;
  opt.n_samples = 200000;
  opt.n_nested = 1;
  opt.original_version = true;
  opt.burn_in = 1000;
  opt.store_pseudo_samples = false;
  ProposalSpec prop;
  prop.scales = {2.4};

  int outside = 0;
  double worst = 1.0;
  for (int s = 1; s <= 20; ++s) {
    auto chain = run_asmh(target, sub, prop, InactiveProposal{}, {0.0, 0.0}, opt,
                          1000 + std::uint64_t(s));
    MomentStats st = y_moments(chain);
    if (std::fabs(st.second - 1.0) > band) ++outside;
    if (std::fabs(st.second - 1.0) > std::fabs(worst - 1.0)) worst = st.second;
  }
  report(4, "bias of per-iteration re-estimation (M=1)", outside >= 15,
         "second moment outside the exact-chain band (1 +- " + fmt(band) + ") in " +
             std::to_string(outside) + "/20 seeds (need >= 15); most biased estimate " +
             fmt(worst));
}

void criterion_5() {
  DensityModel target = anisotropic_target();
  ActiveSubspace sub = e1_subspace();
  InactiveProposal qz;
  Rng rng = make_stream(20250416, "marginal-unbiasedness");
  const int n = 100000;
  Vec d(n);
  for (int i = 0; i < n; ++i)
    d[i] = std::exp(estimate_marginal(target, sub, {0.0}, qz, 2, rng).log_d);
  double m = mean_of(d);
  double se = sd_of(d) / std::sqrt(double(n));
  double truth = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
  bool ok = std::fabs(m - truth) <= 3.0 * se;
  report(5, "marginal estimator unbiasedness", ok,
         "mean of 1e5 estimates " + fmt(m) + ", true marginal " + fmt(truth) +
             ", |diff| " + fmt(std::fabs(m - truth)) + " vs 3se " + fmt(3.0 * se));
}

void criterion_6() {
  Rng rng = make_stream(6, "linalg-acceptance");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim_dist(2, 40);

  double worst_recon = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t m = dim_dist(rng);
    Matrix a(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) a(i, j) = a(j, i) = normal(rng);
    auto eig = symmetric_eigendecompose(a);
    // reconstruction V diag(lambda) V^T
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double r = 0.0;
        for (std::size_t k = 0; k < m; ++k)
          r += eig.eigenvectors(i, k) * eig.eigenvalues[k] * eig.eigenvectors(j, k);
        worst_recon = std::max(worst_recon, std::fabs(r - a(i, j)));
      }
  }

  // rank-1 gradient covariance: constant gradient (3, 4)
  Rng grng = make_stream(6, "rank1");
  auto ss = construct_gradient_covariance(
      [](const Vec&) { return Vec{3.0, 4.0}; },
      [](Rng& r) {
        std::normal_distribution<double> nd(0.0, 1.0);
        return Vec{nd(r), nd(r)};
      },
      2, 50, grng);
  double dir_err = std::max(std::fabs(ss.basis_active(0, 0) - 0.6),
                            std::fabs(ss.basis_active(1, 0) - 0.8));

  double worst_gram = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t m = dim_dist(rng);
    Vec v(m);
    double norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
    for (double& x : v) x /= std::sqrt(norm);
    Matrix first(m, 1);
    for (std::size_t i = 0; i < m; ++i) first(i, 0) = v[i];
    Matrix rest = complete_orthonormal_basis(first);  // the m-1 new columns
    Matrix basis(m, m);
    basis.set_col(0, v);
    for (std::size_t c = 0; c + 1 < m; ++c)
      for (std::size_t i = 0; i < m; ++i) basis(i, c + 1) = rest(i, c);
    for (std::size_t c1 = 0; c1 < m; ++c1)
      for (std::size_t c2 = 0; c2 < m; ++c2) {
        double g = 0.0;
        for (std::size_t i = 0; i < m; ++i) g += basis(i, c1) * basis(i, c2);
        worst_gram = std::max(worst_gram, std::fabs(g - (c1 == c2 ? 1.0 : 0.0)));
      }
  }

  bool ok = worst_recon <= 1e-8 && dir_err <= 1e-6 && worst_gram <= 1e-10;
  report(6, "linear algebra oracles", ok,
         "worst eigen reconstruction " + fmt(worst_recon) +
             " (<= 1e-8), rank-1 direction error " + fmt(dir_err) +
             " (<= 1e-6), worst Gram deviation " + fmt(worst_gram) + " (<= 1e-10)");
}

void criterion_7() {
  // equilibrium X = F * 1 has identically zero drift, so RK4 preserves it bitwise
  Lorenz96Params params;
  params.state_dim = 36;
  params.forcing = 8.0;
  auto eq = integrate(params, Vec(36, 8.0), 0.0, 10.0, 0.01);
  double eq_err = 0.0;
  for (const auto& state : eq.states)
    for (double v : state) eq_err = std::max(eq_err, std::fabs(v - 8.0));

  Lorenz96Params small;
  small.state_dim = 8;
  small.forcing = 8.0;
  Vec x0(8, 0.0);
  x0[0] = 1.0;  // pre-chaotic: short horizon from a small perturbation
  auto ref = integrate(small, x0, 0.0, 1.0, 0.00125);
  auto coarse = integrate(small, x0, 0.0, 1.0, 0.02);
  auto fine = integrate(small, x0, 0.0, 1.0, 0.01);
  auto err = [&](const Trajectory& t) {
    double e = 0.0;
    for (std::size_t k = 0; k < 8; ++k)
      e = std::max(e, std::fabs(t.states.back()[k] - ref.states.back()[k]));
    return e;
  };
  double ratio = err(coarse) / err(fine);
  bool ok = eq_err <= 1e-12 && ratio >= 12.0 && ratio <= 20.0;
  report(7, "ode oracles", ok,
         "equilibrium drift over t in [0,10]: " + fmt(eq_err) +
             " (<= 1e-12), step-halving error ratio " + fmt(ratio) + " (in [12, 20])");
}

std::vector<Vec> easmh_full_space_chain(const ExperimentResult& res, std::size_t m) {
  auto samples = reconstruct_x_samples(*res.subspace, res.chain.y_samples,
                                       res.chain.estimates, res.chain.burn_in);
  std::vector<Vec> xs;
  for (std::size_t i = m - 1; i < samples.size(); i += m) xs.push_back(samples[i].x);
  return xs;
}

double max_short_lag_acf(const std::vector<Vec>& xs) {
  try {
    auto curve = autocorrelation(xs, 10);
    double m = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) m = std::max(m, curve.values[k]);
    return m;
  } catch (const std::exception&) {
    // a chain that never moved is maximally correlated
    return 1.0;
  }
}

void criterion_8() {
  const std::string desk =
      "experiment = lorenz96\n"
      "lorenz96.dim = 8\n"
      "lorenz96.t1 = 2\n";
  int easmh_better = 0;
  for (int s = 1; s <= 20; ++s) {
    RunConfig vcfg = parse_config(desk + "sampler.mode = vanilla\n");
    vcfg.seed = std::uint64_t(s);
    auto vres = run_pipeline(vcfg);
    std::vector<Vec> vxs(vres.chain.y_samples.begin() +
                             std::ptrdiff_t(vres.chain.burn_in),
                         vres.chain.y_samples.end());
    double vmax = max_short_lag_acf(vxs);

    RunConfig ecfg = parse_config(desk);
    ecfg.seed = std::uint64_t(s);
    auto eres = run_pipeline(ecfg);
    auto exs = easmh_full_space_chain(eres, ecfg.n_nested);
    double emax = max_short_lag_acf(exs);

    if (emax <= vmax) ++easmh_better;
  }

  // full scale: the pipeline must run and report the detected gap
  // (chain shortened; the gap comes from the 500 construction draws)
  RunConfig full = parse_config("experiment = lorenz96\nsampler.N = 50\n");
  full.seed = 8;
  std::string gap_note = "full-scale run failed";
  bool full_ok = false;
  try {
    auto res = run_pipeline(full);
    SpectralGap gap = detect_spectral_gap(res.subspace->eigenvalues);
    gap_note = "full-scale (36 dims, t=10) spectral gap at dimension " +
               std::to_string(gap.cut_index) + " (ratio " + fmt(gap.gap_ratio) + ")";
    full_ok = true;
  } catch (const std::exception& e) {
    gap_note = std::string("full-scale run failed: ") + e.what();
  }

  report(8, "lorenz96 desk-scale pipeline", easmh_better >= 14 && full_ok,
         "easmh max lag-1..10 autocorrelation <= vanilla in " +
             std::to_string(easmh_better) + "/20 seeds (need >= 14); " + gap_note);
}

void criterion_9() {
  Rng rng = make_stream(9, "diag-acceptance");
  std::normal_distribution<double> noise(0.0, 1.0);

  Vec ar(100000);
  ar[0] = 0.0;
  for (std::size_t t = 1; t < ar.size(); ++t) ar[t] = 0.5 * ar[t - 1] + noise(rng);
  std::vector<Vec> ar_chain;
  for (double v : ar) ar_chain.push_back({v});
  auto curve = autocorrelation(ar_chain, 10);
  double worst_acf = 0.0;
  for (std::size_t k = 1; k <= 10; ++k)
    worst_acf = std::max(worst_acf, std::fabs(curve.values[k] - std::pow(0.5, double(k))));

  std::vector<Vec> iid;
  for (int t = 0; t < 20000; ++t) iid.push_back({noise(rng)});
  double ess = effective_sample_size(iid)[0];
  double ess_rel = std::fabs(ess / 20000.0 - 1.0);

  std::vector<Vec> pts;
  for (int i = 0; i < 2000; ++i) pts.push_back({noise(rng)});
  GridSpec grid{{-8.0}, {8.0}, {321}};
  auto kde = gaussian_kde(pts, Vec(pts.size(), 1.0), grid);
  double h = 16.0 / 320.0, mass = 0.0;
  for (std::size_t i = 0; i < kde.density.size(); ++i)
    mass += ((i == 0 || i + 1 == kde.density.size()) ? 0.5 : 1.0) * kde.density[i] * h;

  bool ok = worst_acf <= 0.02 && ess_rel <= 0.15 && std::fabs(mass - 1.0) <= 0.01;
  report(9, "diagnostics oracles", ok,
         "AR(1) acf max deviation " + fmt(worst_acf) + " (<= 0.02), iid ESS/N error " +
             fmt(ess_rel) + " (<= 0.15), KDE mass " + fmt(mass) + " (within 0.01 of 1)");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10() {
  fs::path root = fs::temp_directory_path() / "easmh_acceptance_det";
  fs::remove_all(root);

  auto run_into = [&](const std::string& cfg_text, std::uint64_t seed,
                      const fs::path& dir) {
    RunConfig cfg = parse_config(cfg_text);
    cfg.seed = seed;
    cfg.output_dir = dir.string();
    return run_experiment(cfg);
  };
  const std::string mix = "experiment = mixture2d\nsampler.N = 200\n";
  const std::string l96 =
      "experiment = lorenz96\nlorenz96.dim = 6\nlorenz96.t1 = 0.5\n"
      "sampler.N = 40\nsampler.M = 4\nsubspace.N = 100\n";

  bool ok = true;
  std::string detail;
  for (const auto& [name, text] : {std::pair<std::string, std::string>{"mixture2d", mix},
                                   {"lorenz96", l96}}) {
    int rc_a = run_into(text, 11, root / (name + "_a"));
    int rc_b = run_into(text, 11, root / (name + "_b"));
    setenv("EASMH_THREADS", "4", 1);
    int rc_c = run_into(text, 11, root / (name + "_c"));
    unsetenv("EASMH_THREADS");
    if (rc_a != 0 || rc_b != 0 || rc_c != 0) {
      ok = false;
      detail += name + ": run failed; ";
      continue;
    }
    for (const char* f : {"y_samples.csv", "x_samples.csv"}) {
      std::string a = slurp(root / (name + "_a") / f);
      if (a.empty() || a != slurp(root / (name + "_b") / f) ||
          a != slurp(root / (name + "_c") / f)) {
        ok = false;
        detail += name + "/" + f + " differs; ";
      }
    }
  }
  if (ok)
    detail = "repeat runs and a 4-thread run give byte-identical sample CSVs "
             "for mixture2d and lorenz96";
  fs::remove_all(root);
  report(10, "byte-level determinism across reruns and thread counts", ok, detail);
}

}  // namespace

int main() {
  criterion_1_and_2();
  double band = criterion_3();
  criterion_4(band);
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures == 0)
    std::printf("all 10 acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures;
}
