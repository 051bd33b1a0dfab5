#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "easmh/experiment.hpp"

using namespace easmh;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_mixture_config(const fs::path& out, SamplerMode mode) {
  RunConfig cfg = parse_config("experiment = mixture2d\n");
  cfg.mode = mode;
  cfg.n_samples = mode == SamplerMode::Vanilla ? 400 : 120;
  cfg.n_nested = 5;
  cfg.burn_in = 20;
  cfg.subspace_n = 200;
  cfg.seed = 7;
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("build_target covers every experiment") {
  RunConfig cfg = parse_config("experiment = mixture2d\n");
  CHECK(build_target(cfg).dim == 2);

  cfg = parse_config("experiment = mixture10d\n");
  CHECK(build_target(cfg).dim == 10);

  cfg = parse_config("experiment = custom\ncustom.dim = 3\ncustom.variances = 1, 2, 4\n");
  auto target = build_target(cfg);
  CHECK(target.dim == 3);
  // diagonal Gaussian: symmetry along each axis
  CHECK(target.log_density({1.0, 0.0, 0.0}) ==
        doctest::Approx(target.log_density({-1.0, 0.0, 0.0})).epsilon(1e-14));

  TempDir tmp("easmh_test_target");
  cfg = parse_config("experiment = lorenz96\nlorenz96.dim = 6\nlorenz96.t1 = 0.5\n");
  auto posterior = build_target(cfg, tmp.path / "data.csv");
  CHECK(posterior.dim == 7);
  CHECK(fs::exists(tmp.path / "data.csv"));
  auto data = load_observations_csv(tmp.path / "data.csv");
  CHECK(data.n_components == 6);
  CHECK(data.times.size() == 50);
}

TEST_CASE("build_subspace counts evaluations and honors the method") {
  RunConfig cfg = parse_config("experiment = mixture2d\nsubspace.N = 150\n");
  auto target = build_target(cfg);
  long long evals = 0;
  auto ss = build_subspace(cfg, target, &evals);
  CHECK(ss.method == SubspaceMethod::LinearRegression);
  CHECK(ss.ambient_dim == 2);
  CHECK(ss.active_dim == 1);
  CHECK(evals == 150);

  cfg.subspace_method = SubspaceMethod::PosteriorCovariance;
  auto ss2 = build_subspace(cfg, target, &evals);
  CHECK(ss2.method == SubspaceMethod::PosteriorCovariance);
  CHECK(evals == 150);

  // the mixture target has no likelihood gradient
  cfg.subspace_method = SubspaceMethod::GradientCovariance;
  CHECK_THROWS_WITH_AS(build_subspace(cfg, target, &evals),
                       doctest::Contains("gradient"), Error);
}

TEST_CASE("pipeline: vanilla and easmh bookkeeping") {
  TempDir tmp("easmh_test_pipe");
  auto vcfg = small_mixture_config(tmp.path / "v", SamplerMode::Vanilla);
  auto vres = run_pipeline(vcfg);
  CHECK(!vres.subspace.has_value());
  CHECK(vres.chain.evaluation_count == 400);
  CHECK(vres.chain.y_samples.size() == 400);

  auto ecfg = small_mixture_config(tmp.path / "e", SamplerMode::Easmh);
  auto eres = run_pipeline(ecfg);
  REQUIRE(eres.subspace.has_value());
  CHECK(eres.chain.evaluation_count == 5 * (120 + 1));
  CHECK(eres.construction_evaluations == 200);
  CHECK(eres.chain.active_dim == 1);
  CHECK(eres.chain.estimates.size() == 120);
}

TEST_CASE("pipeline: determinism across repeat runs") {
  TempDir tmp("easmh_test_det");
  auto cfg = small_mixture_config(tmp.path / "a", SamplerMode::Easmh);
  auto a = run_pipeline(cfg);
  auto b = run_pipeline(cfg);
  CHECK(a.chain.accepted == b.chain.accepted);
  CHECK(a.chain.state_log_d == b.chain.state_log_d);
  for (std::size_t i = 0; i < a.chain.y_samples.size(); ++i)
    CHECK(a.chain.y_samples[i] == b.chain.y_samples[i]);
}

TEST_CASE("run_experiment writes the full artifact set") {
  TempDir tmp("easmh_test_artifacts");
  auto cfg = small_mixture_config(tmp.path / "run", SamplerMode::Easmh);
  REQUIRE(run_experiment(cfg) == 0);
  fs::path dir = tmp.path / "run";
  for (const char* f : {"subspace.txt", "y_samples.csv", "x_samples.csv",
                        "autocorrelation.csv", "kde.csv", "occupancy.csv",
                        "summary.json"})
    CHECK(fs::exists(dir / f));
  CHECK(!fs::exists(dir / "FAILED"));

  auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["experiment"] == "mixture2d");
  CHECK(summary["mode"] == "easmh");
  CHECK(summary["sampler_evaluations"].get<long long>() == 5 * (120 + 1));
  CHECK(summary["construction_evaluations"].get<long long>() == 200);
  CHECK(summary["total_evaluations"].get<long long>() ==
        summary["sampler_evaluations"].get<long long>() +
            summary["construction_evaluations"].get<long long>());
  double acc = summary["acceptance_rate"].get<double>();
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  CHECK(summary["subspace"]["active_dim"].get<int>() == 1);
  CHECK(summary["config"]["sampler.N"].get<int>() == 120);
  auto occ = summary["mode_occupancy"].get<Vec>();
  REQUIRE(occ.size() == 2);
  CHECK(occ[0] + occ[1] == doctest::Approx(1.0).epsilon(1e-12));

  // y_samples.csv header and row count: 1 header + one row per iteration
  std::istringstream ys(slurp(dir / "y_samples.csv"));
  std::string line;
  std::getline(ys, line);
  CHECK(line == "iter,accepted,y1,log_d");
  std::size_t rows = 0;
  while (std::getline(ys, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 120);

  // x_samples.csv drops burn-in iterations and has M rows per kept iteration
  std::istringstream xs(slurp(dir / "x_samples.csv"));
  std::getline(xs, line);
  CHECK(line == "iter,j,weight,x1,x2");
  rows = 0;
  while (std::getline(xs, line))
    if (!line.empty()) ++rows;
  CHECK(rows == (120 - 20) * 5);
}

TEST_CASE("run_experiment failure leaves a FAILED marker") {
  TempDir tmp("easmh_test_failed");
  auto cfg = small_mixture_config(tmp.path / "bad", SamplerMode::Easmh);
  cfg.subspace_file = (tmp.path / "no_such_file.txt").string();
  CHECK(run_experiment(cfg) == 2);
  CHECK(fs::exists(tmp.path / "bad" / "FAILED"));
}

TEST_CASE("subspace file round trip through the pipeline") {
  TempDir tmp("easmh_test_ssfile");
  auto cfg = small_mixture_config(tmp.path / "build", SamplerMode::Easmh);
  auto target = build_target(cfg);
  auto ss = build_subspace(cfg, target);
  fs::path file = tmp.path / "subspace.txt";
  save_subspace(ss, file);

  auto cfg2 = small_mixture_config(tmp.path / "reuse", SamplerMode::Easmh);
  cfg2.subspace_file = file.string();
  auto res = run_pipeline(cfg2);
  CHECK(res.construction_evaluations == 0);
  CHECK(res.chain.active_dim == ss.active_dim);

  // and the chain is identical to a run with the freshly built subspace,
  // because construction and sampling use separate random streams
  auto direct = run_pipeline(cfg);
  CHECK(res.chain.accepted == direct.chain.accepted);
  CHECK(res.chain.state_log_d == direct.chain.state_log_d);
}

TEST_CASE("compare_runs builds side-by-side tables") {
  TempDir tmp("easmh_test_compare");
  auto vcfg = small_mixture_config(tmp.path / "v", SamplerMode::Vanilla);
  auto ecfg = small_mixture_config(tmp.path / "e", SamplerMode::Easmh);
  REQUIRE(run_experiment(vcfg) == 0);
  REQUIRE(run_experiment(ecfg) == 0);

  fs::path out = tmp.path / "cmp";
  compare_runs({(tmp.path / "v").string(), (tmp.path / "e").string()}, 20, out.string());
  CHECK(fs::exists(out / "acceptance.csv"));
  CHECK(fs::exists(out / "autocorrelation.csv"));
  CHECK(fs::exists(out / "occupancy.csv"));

  std::istringstream ac(slurp(out / "autocorrelation.csv"));
  std::string line;
  std::getline(ac, line);
  CHECK(line == "lag,v,e");
  std::size_t rows = 0;
  while (std::getline(ac, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 21);

  CHECK_THROWS_AS(compare_runs({(tmp.path / "v").string()}, 20, out.string()), Error);
  CHECK_THROWS_AS(
      compare_runs({(tmp.path / "v").string(), (tmp.path / "nope").string()}, 20,
                   out.string()),
      Error);
}

TEST_CASE("lorenz96 pipeline at desk scale produces a sane posterior run") {
  TempDir tmp("easmh_test_l96");
  RunConfig cfg = parse_config(
      "experiment = lorenz96\n"
      "lorenz96.dim = 6\n"
      "lorenz96.t1 = 0.4\n"
      "sampler.mode = easmh\n"
      "sampler.N = 60\n"
      "sampler.M = 4\n"
      "subspace.N = 120\n"
      "seed = 3\n");
  cfg.output_dir = (tmp.path / "run").string();
  REQUIRE(run_experiment(cfg) == 0);

  auto summary = nlohmann::json::parse(slurp(tmp.path / "run" / "summary.json"));
  CHECK(summary["experiment"] == "lorenz96");
  CHECK(summary["config"]["lorenz96.dim"].get<int>() == 6);
  CHECK(summary.contains("ode_divergences"));
  CHECK(summary["subspace"]["method"] == "posterior_covariance");
  CHECK(fs::exists(tmp.path / "run" / "data.csv"));
  CHECK(fs::exists(tmp.path / "run" / "kde.csv"));
}
